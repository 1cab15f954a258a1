//! Reservoir-computing binary detector lifted to 4-PAM by shifting.
//!
//! Every real coordinate `x̃` of the transmitted block (one axis of one
//! 16-QAM symbol) owns a binary head that scores `P(x̃ = +1 | Ỹ)` against
//! `P(x̃ = −1 | Ỹ)` from the reservoir readout of the received block. The
//! head only ever sees ±1 decisions; the other levels come from moving the
//! received signal along the coordinate's shift vector `S̃`:
//!
//! ```text
//! P(−1)/P(−3) = L(Ỹ + 2S̃)    P(+1)/P(−1) = L(Ỹ)    P(+3)/P(+1) = L(Ỹ − 2S̃)
//! ```
//!
//! where `L` is the head's likelihood ratio. Together with `Σ P = 1` this
//! fixes the 4-level posterior, and the detector takes its argmax.
//!
//! All heads share one reservoir and one readout `W1`; each has its own
//! output weights, initialized to the DFT row of its subcarrier.

mod training;

pub use training::{
    augment_neighbors, build_binary_training_set, train_bank, BinarySample, HeadGrad, NeighborSample,
    RidgeWarmStart, TrainReport, TrainingHyper, TrainingProblem,
};

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelTaps;
use crate::realmap::{all_shift_vectors, Coord, Part, RealStack, ShiftVector};
use crate::reservoir::{BatchRun, ReservoirWeights};
use crate::waveform::{FourierOps, PAM4_LEVELS};
use crate::{ComplexMat, Error, Result};

/// Heads are addressed by the transmitted coordinate they decide.
pub type HeadKey = Coord;

/// Lower clamp on softmax outputs before ratios are formed.
pub const PROB_FLOOR: f64 = 1e-12;

/// Output layer of one binary detector: one weight vector per class, each
/// acting on the row-major flattened readout (`out_dim · Nc` entries).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHead {
    pub w_neg: Array1<f64>,
    pub w_pos: Array1<f64>,
}

impl BinaryHead {
    /// Score difference `s₊ − s₋` for a flattened readout.
    pub fn logit(&self, z: &[f64]) -> f64 {
        self.w_pos.iter().zip(self.w_neg.iter()).zip(z).map(|((p, n), v)| (p - n) * v).sum()
    }

    /// Both softmax probabilities `(P(−1), P(+1))` for a flattened readout.
    pub fn probabilities(&self, z: &[f64]) -> (f64, f64) {
        let p_pos = sigmoid(self.logit(z));
        (1.0 - p_pos, p_pos)
    }

    fn diff(&self) -> Array1<f64> {
        &self.w_pos - &self.w_neg
    }
}

pub(crate) fn sigmoid(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Posterior over the 4-PAM levels `[−3, −1, +1, +3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorQuad {
    pub p: [f64; 4],
}

impl PosteriorQuad {
    /// Most probable level; ties resolve to the smaller level.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for i in 1..4 {
            if self.p[i] > self.p[best] {
                best = i;
            }
        }
        PAM4_LEVELS[best]
    }
}

const RATIO_MAX: f64 = (1.0 - PROB_FLOOR) / PROB_FLOOR;

fn clamp_ratio(r: f64) -> f64 {
    if r.is_nan() {
        1.0
    } else {
        r.clamp(1.0 / RATIO_MAX, RATIO_MAX)
    }
}

/// Solves the ratio chain `P(−1) = r₁P(−3)`, `P(+1) = r₂P(−1)`,
/// `P(+3) = r₃P(+1)`, `Σ P = 1`. Out-of-range ratios are clamped.
pub fn solve_posterior_chain(r1: f64, r2: f64, r3: f64) -> PosteriorQuad {
    let (r1, r2, r3) = (clamp_ratio(r1), clamp_ratio(r2), clamp_ratio(r3));
    let (a, b, c) = (r1, r1 * r2, r1 * r2 * r3);
    let p_m3 = 1.0 / (1.0 + a + b + c);
    let p = [p_m3, a * p_m3, b * p_m3, c * p_m3];
    // renormalize away the last-ulp residue of the division
    let total: f64 = p.iter().sum();
    PosteriorQuad { p: p.map(|v| v / total) }
}

fn ratio_from_logit(d: f64) -> f64 {
    let p_pos = sigmoid(d).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    p_pos / (1.0 - p_pos)
}

/// DFT-row initialization of a head: both classes start at the real form of
/// row `nsc` of `Fᴴ`, applied to receive stream `ntx` of the readout.
///
/// For `part = Re` the stream's real row gets `Re(d)` and its imaginary row
/// `−Im(d)`; for `part = Im` they get `Im(d)` and `Re(d)`, with `d = Fᴴ[nsc, :]`.
pub fn init_head(ntx: usize, nsc: usize, part: Part, fourier: &FourierOps, nr: usize) -> BinaryHead {
    let nc = fourier.nc();
    let mut w = Array2::<f64>::zeros((2 * nr, nc));
    for k in 0..nc {
        let d = fourier.fh[[nsc, k]];
        let (re_row, im_row) = match part {
            Part::Re => (d.re, -d.im),
            Part::Im => (d.im, d.re),
        };
        w[[ntx, k]] = re_row;
        w[[nr + ntx, k]] = im_row;
    }
    let flat = Array1::from(w.into_raw_vec_and_offset().0);
    BinaryHead { w_neg: flat.clone(), w_pos: flat }
}

/// How a received block is unrolled in time before it enters the reservoir.
///
/// The block after CP removal is one period of a cyclic signal, so the
/// reservoir sees `warmup` samples of its tail first and `delay` samples of
/// its head after it. The readout for sample `k` is taken `delay` steps
/// late, so the input window around `k` covers both earlier and later samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceLayout {
    pub warmup: usize,
    pub delay: usize,
}

impl SequenceLayout {
    /// Warm-up of one input window, readout delay of half a window.
    pub fn for_window(window: usize) -> Self {
        Self { warmup: window, delay: window / 2 }
    }

    /// The unaligned layout: states read at the sample they were driven by.
    pub fn plain() -> Self {
        Self { warmup: 0, delay: 0 }
    }

    pub fn extended_len(&self, nc: usize) -> usize {
        self.warmup + nc + self.delay
    }

    pub fn first_aligned(&self) -> usize {
        self.warmup + self.delay
    }
}

/// Per-frame detector state: the shared reservoir and readout, one head and
/// one shift vector per coordinate, and the input normalization.
#[derive(Debug, Clone)]
pub struct DetectorBank {
    reservoir: ReservoirWeights,
    heads: Vec<BinaryHead>,
    shifts: Vec<ShiftVector>,
    norm: f64,
    nt: usize,
    nr: usize,
    nc: usize,
    layout: SequenceLayout,
    /// Input drives of `S̃/norm` per coordinate, refreshed with `norm` and `shifts`.
    shift_drives: Vec<Array2<f64>>,
}

/// Hard decisions and posteriors for one data symbol.
#[derive(Debug, Clone)]
pub struct Detection {
    pub symbols: ComplexMat,
    /// One quad per coordinate, in [`Coord::index`] order.
    pub posteriors: Vec<PosteriorQuad>,
}

impl DetectorBank {
    /// Builds a bank for the channel `taps`, with every head at its DFT initialization.
    pub fn new(
        reservoir: ReservoirWeights,
        taps: &ChannelTaps,
        fourier: &FourierOps,
        layout: SequenceLayout,
    ) -> Result<Self> {
        let (nt, nr, nc) = (taps.nt(), taps.nr(), fourier.nc());
        let spec = reservoir.spec();
        if spec.in_dim != 2 * nr || spec.out_dim != 2 * nr {
            return Err(Error::Config(format!(
                "reservoir must map 2·Nr = {} inputs to 2·Nr outputs, got {} → {}",
                2 * nr,
                spec.in_dim,
                spec.out_dim
            )));
        }
        if nt > nr {
            return Err(Error::Config(format!(
                "heads read transmit stream estimates from the {nr} readout streams, Nt = {nt} is too many"
            )));
        }
        let heads = Coord::all(nt, nc).map(|c| init_head(c.ntx, c.nsc, c.part, fourier, nr)).collect();
        let mut bank = Self {
            reservoir,
            heads,
            shifts: Vec::new(),
            norm: 1.0,
            nt,
            nr,
            nc,
            layout,
            shift_drives: Vec::new(),
        };
        bank.set_channel(taps, fourier)?;
        Ok(bank)
    }

    /// Replaces the shift vectors with those of another channel (or channel estimate).
    pub fn set_channel(&mut self, taps: &ChannelTaps, fourier: &FourierOps) -> Result<()> {
        if taps.nt() != self.nt || taps.nr() != self.nr || fourier.nc() != self.nc {
            return Err(Error::Shape("channel does not match the bank dimensions".into()));
        }
        self.shifts = all_shift_vectors(taps, fourier)?;
        self.refresh_drives()
    }

    pub fn set_norm(&mut self, norm: f64) -> Result<()> {
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numeric(format!("input normalization must be positive, got {norm}")));
        }
        self.norm = norm;
        self.refresh_drives()
    }

    fn refresh_drives(&mut self) -> Result<()> {
        self.shift_drives = self
            .shifts
            .iter()
            .map(|s| {
                let u = self.extend(&s.s.scaled(1.0 / self.norm));
                self.reservoir.input_drive(u.view())
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn reservoir(&self) -> &ReservoirWeights {
        &self.reservoir
    }

    /// Mutable access to the shared readout `W1`.
    pub fn w1_mut(&mut self) -> &mut Array2<f64> {
        &mut self.reservoir.w1
    }

    pub fn heads(&self) -> &[BinaryHead] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [BinaryHead] {
        &mut self.heads
    }

    pub fn shifts(&self) -> &[ShiftVector] {
        &self.shifts
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn layout(&self) -> SequenceLayout {
        self.layout
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.nt, self.nr, self.nc)
    }

    fn index_of(&self, key: HeadKey) -> Result<usize> {
        if key.ntx >= self.nt || key.nsc >= self.nc {
            return Err(Error::Lookup(format!("no head for {key:?}")));
        }
        Ok(key.index(self.nt, self.nc))
    }

    pub fn head(&self, key: HeadKey) -> Result<&BinaryHead> {
        Ok(&self.heads[self.index_of(key)?])
    }

    pub fn shift(&self, key: HeadKey) -> Result<&ShiftVector> {
        let idx = self.index_of(key)?;
        self.shifts.get(idx).ok_or_else(|| Error::Lookup(format!("no shift vector for {key:?}")))
    }

    fn check_received(&self, yr: &RealStack) -> Result<()> {
        if yr.complex_rows() != self.nr || yr.ncols() != self.nc {
            return Err(Error::Shape(format!(
                "received block is {}×{}, expected {}×{}",
                yr.data().nrows(),
                yr.ncols(),
                2 * self.nr,
                self.nc
            )));
        }
        Ok(())
    }

    /// Cyclic unrolling of a `2Nr × Nc` block (not normalized).
    fn extend(&self, yr: &RealStack) -> Array2<f64> {
        let nc = self.nc as isize;
        let len = self.layout.extended_len(self.nc);
        let warm = self.layout.warmup as isize;
        let d = yr.data();
        Array2::from_shape_fn((d.nrows(), len), |(r, e)| d[[r, (e as isize - warm).rem_euclid(nc) as usize]])
    }

    /// Drive of the normalized, unrolled received block.
    pub(crate) fn received_drive(&self, yr: &RealStack) -> Result<Array2<f64>> {
        self.check_received(yr)?;
        let u = self.extend(&yr.scaled(1.0 / self.norm));
        self.reservoir.input_drive(u.view())
    }

    pub(crate) fn shift_drives(&self) -> &[Array2<f64>] {
        &self.shift_drives
    }

    /// Reservoir states at the `Nc` aligned readout positions (`n × Nc`).
    pub fn aligned_states(&self, yr: &RealStack) -> Result<Array2<f64>> {
        let drive = self.received_drive(yr)?;
        let states = self.reservoir.run_drive(&drive, &Array1::zeros(self.reservoir.n_neurons()));
        let start = self.layout.first_aligned();
        Ok(states.slice(ndarray::s![.., start..start + self.nc]).to_owned())
    }

    /// `tanh(W1·states)` at the aligned positions (`2Nr × Nc`).
    pub fn features(&self, yr: &RealStack) -> Result<Array2<f64>> {
        Ok(self.reservoir.w1.dot(&self.aligned_states(yr)?).mapv(f64::tanh))
    }

    /// `(P(x̃ = −1 | Ỹ), P(x̃ = +1 | Ỹ))` from the head of `key`.
    pub fn forward_binary(&self, key: HeadKey, yr: &RealStack) -> Result<(f64, f64)> {
        let head = self.head(key)?;
        let z = self.features(yr)?;
        Ok(head.probabilities(z.as_slice().expect("standard layout")))
    }

    /// `P(+1 | Ỹ) / P(−1 | Ỹ)` with both probabilities clamped to `[PROB_FLOOR, 1 − PROB_FLOOR]`.
    pub fn likelihood_ratio(&self, key: HeadKey, yr: &RealStack) -> Result<f64> {
        let (p_neg, p_pos) = self.forward_binary(key, yr)?;
        Ok(p_pos.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR) / p_neg.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR))
    }

    /// 4-level posterior of one coordinate from three shifted evaluations of its head.
    pub fn posteriors_4pam(&self, key: HeadKey, yr: &RealStack) -> Result<PosteriorQuad> {
        let s = &self.shift(key)?.s;
        let r1 = self.likelihood_ratio(key, &yr.axpy(2.0, s))?;
        let r2 = self.likelihood_ratio(key, yr)?;
        let r3 = self.likelihood_ratio(key, &yr.axpy(-2.0, s))?;
        Ok(solve_posterior_chain(r1, r2, r3))
    }

    /// Detects one received data symbol (`2Nr × Nc`, CP removed).
    ///
    /// All `1 + 2·(2·Nt·Nc)` reservoir runs needed for the shifted
    /// evaluations are advanced together.
    pub fn detect_symbol(&self, yr: &RealStack) -> Result<Detection> {
        let base = vec![self.received_drive(yr)?];
        let heads = self.heads.len();
        let mut runs = Vec::with_capacity(1 + 2 * heads);
        runs.push(BatchRun { base: 0, shift: None, coef: 0.0 });
        for h in 0..heads {
            runs.push(BatchRun { base: 0, shift: Some(h), coef: 2.0 });
            runs.push(BatchRun { base: 0, shift: Some(h), coef: -2.0 });
        }
        let diffs: Vec<Array1<f64>> = self.heads.iter().map(BinaryHead::diff).collect();
        let logits = self.batch_logits(&base, &runs, |b| if b == 0 { None } else { Some((b - 1) / 2) }, &diffs);

        let posteriors: Vec<PosteriorQuad> = (0..heads)
            .map(|h| {
                let r1 = ratio_from_logit(logits.shifted[1 + 2 * h]);
                let r2 = ratio_from_logit(logits.common[h]);
                let r3 = ratio_from_logit(logits.shifted[2 + 2 * h]);
                solve_posterior_chain(r1, r2, r3)
            })
            .collect();
        let mut symbols = Array2::zeros((self.nt, self.nc));
        for (idx, q) in posteriors.iter().enumerate() {
            let c = Coord::from_index(idx, self.nt, self.nc);
            let z: &mut Complex64 = &mut symbols[[c.ntx, c.nsc]];
            match c.part {
                Part::Re => z.re = q.argmax(),
                Part::Im => z.im = q.argmax(),
            }
        }
        Ok(Detection { symbols, posteriors })
    }

    /// Detects every data symbol of a frame.
    pub fn detect_frame(&self, yr_data: &[RealStack]) -> Result<Vec<Detection>> {
        yr_data.iter().map(|y| self.detect_symbol(y)).collect()
    }

    /// Advances `runs` together and accumulates head logits from the aligned
    /// readouts. `head_of(b)` names the single head scored on run `b`; runs
    /// mapped to `None` are scored by every head.
    fn batch_logits(
        &self,
        bases: &[Array2<f64>],
        runs: &[BatchRun],
        head_of: impl Fn(usize) -> Option<usize>,
        diffs: &[Array1<f64>],
    ) -> BatchLogits {
        let n = self.reservoir.n_neurons();
        let out_dim = 2 * self.nr;
        let b = runs.len();
        let start = self.layout.first_aligned();
        let owner: Vec<Option<usize>> = (0..b).map(&head_of).collect();
        let mut shifted = vec![0.0; b];
        let mut common = vec![0.0; diffs.len()];
        let mut z = vec![0.0; out_dim * b];
        let w1 = &self.reservoir.w1;
        self.reservoir.run_batch(bases, &self.shift_drives, runs, |t, states| {
            if t < start || t >= start + self.nc {
                return;
            }
            let k = t - start;
            z.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..out_dim {
                let zr = &mut z[r * b..(r + 1) * b];
                for i in 0..n {
                    let w = w1[[r, i]];
                    if w == 0.0 {
                        continue;
                    }
                    for (o, s) in zr.iter_mut().zip(&states[i * b..(i + 1) * b]) {
                        *o += w * s;
                    }
                }
                zr.iter_mut().for_each(|v| *v = v.tanh());
            }
            for (run, own) in owner.iter().enumerate() {
                match own {
                    Some(h) => {
                        let d = &diffs[*h];
                        shifted[run] += (0..out_dim).map(|r| d[r * self.nc + k] * z[r * b + run]).sum::<f64>();
                    }
                    None => {
                        for (h, d) in diffs.iter().enumerate() {
                            common[h] += (0..out_dim).map(|r| d[r * self.nc + k] * z[r * b + run]).sum::<f64>();
                        }
                    }
                }
            }
        });
        BatchLogits { shifted, common }
    }
}

struct BatchLogits {
    /// Logit of each run under its owning head.
    shifted: Vec<f64>,
    /// Logit of every head on the shared (unshifted) runs.
    common: Vec<f64>,
}

/// Stacks readout features along time: helper for tests and diagnostics.
pub fn flatten(z: &Array2<f64>) -> Vec<f64> {
    z.axis_iter(Axis(0)).flat_map(|r| r.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reservoir::{init_reservoir, ReservoirSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_examples() {
        let q = solve_posterior_chain(1.0, 1.0, 1.0);
        assert_eq!(q.p, [0.25; 4]);
        let r = 3.0;
        let q = solve_posterior_chain(r, r, r);
        let z = 1.0 + r + r * r + r * r * r;
        for (i, p) in q.p.iter().enumerate() {
            assert!((p - r.powi(i as i32) / z).abs() < 1e-15);
        }
        let q = solve_posterior_chain(f64::NAN, f64::INFINITY, 0.0);
        assert!((q.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(q.p.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(PosteriorQuad { p: [0.25; 4] }.argmax(), -3.0);
        assert_eq!(PosteriorQuad { p: [0.1, 0.4, 0.4, 0.1] }.argmax(), -1.0);
        assert_eq!(PosteriorQuad { p: [0.1, 0.2, 0.3, 0.4] }.argmax(), 3.0);
    }

    #[test]
    fn head_init_selects_its_subcarrier() {
        let nc = 16;
        let ops = FourierOps::new(nc).unwrap();
        let nr = 2;
        for tone in [0, 3, 9] {
            // stream 0 carries exp(2πi·tone·k/Nc)
            let mut z = Array2::zeros((2 * nr, nc));
            for k in 0..nc {
                let c = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (tone * k) as f64 / nc as f64);
                z[[0, k]] = c.re;
                z[[nr, k]] = c.im;
            }
            let flat = flatten(&z);
            let scores: Vec<f64> = (0..nc)
                .map(|nsc| {
                    let h = init_head(0, nsc, Part::Re, &ops, nr);
                    h.w_pos.iter().zip(&flat).map(|(a, b)| a * b).sum()
                })
                .collect();
            let best = scores.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(best, tone);
            assert!((scores[tone] - (nc as f64).sqrt()).abs() < 1e-12);
        }
        let h = init_head(1, 5, Part::Im, &ops, nr);
        assert_eq!(h, init_head(1, 5, Part::Im, &ops, nr));
        assert_eq!(h.w_pos, h.w_neg);
        assert_eq!(h.probabilities(&flatten(&Array2::from_elem((4, nc), 0.3))), (0.5, 0.5));
    }

    fn toy_bank(seed: u64) -> (DetectorBank, FourierOps) {
        let ops = FourierOps::new(8).unwrap();
        let spec = ReservoirSpec { n_neurons: 16, window: 4, sparsity: 0.5, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut res = init_reservoir(&spec, &mut rng).unwrap();
        res.w1 = Array2::from_shape_simple_fn((4, 16), || rand::Rng::random_range(&mut rng, -0.5..0.5));
        let ch = crate::channel::sample_channel(3, 2, 2, 3.0, &mut rng).unwrap();
        let mut bank = DetectorBank::new(res, &ch, &ops, SequenceLayout::for_window(4)).unwrap();
        for h in bank.heads_mut() {
            h.w_pos.mapv_inplace(|v| v + rand::Rng::random_range(&mut rng, -0.3..0.3));
        }
        (bank, ops)
    }

    #[test]
    fn batched_detection_matches_single_path() {
        let (bank, _) = toy_bank(31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let y = RealStack::new(Array2::from_shape_simple_fn((4, 8), || rand::Rng::random_range(&mut rng, -3.0..3.0))).unwrap();
        let det = bank.detect_symbol(&y).unwrap();
        for (idx, q) in det.posteriors.iter().enumerate() {
            let key = Coord::from_index(idx, 2, 8);
            let single = bank.posteriors_4pam(key, &y).unwrap();
            for (a, b) in q.p.iter().zip(single.p) {
                assert!((a - b).abs() < 1e-9, "{key:?}: {:?} vs {:?}", q.p, single.p);
            }
        }
    }

    #[test]
    fn equal_columns_give_even_odds() {
        let (mut bank, _) = toy_bank(33);
        for h in bank.heads_mut() {
            h.w_pos = h.w_neg.clone();
        }
        let y = RealStack::new(Array2::from_elem((4, 8), 0.7)).unwrap();
        let key = Coord::new(1, 2, Part::Im);
        assert_eq!(bank.forward_binary(key, &y).unwrap(), (0.5, 0.5));
        assert_eq!(bank.likelihood_ratio(key, &y).unwrap(), 1.0);
        assert!(matches!(bank.forward_binary(Coord::new(2, 0, Part::Re), &y), Err(Error::Lookup(_))));
    }

    #[test]
    fn swapped_columns_invert_the_ratio() {
        let (mut bank, _) = toy_bank(34);
        let y = RealStack::new(Array2::from_shape_fn((4, 8), |(r, k)| (r as f64 - k as f64) * 0.3)).unwrap();
        let key = Coord::new(0, 6, Part::Re);
        let r = bank.likelihood_ratio(key, &y).unwrap();
        let (p, s) = bank.forward_binary(key, &y).unwrap();
        assert!((p + s - 1.0).abs() < 1e-12);
        for h in bank.heads_mut() {
            std::mem::swap(&mut h.w_pos, &mut h.w_neg);
        }
        let swapped = bank.likelihood_ratio(key, &y).unwrap();
        assert!((r * swapped - 1.0).abs() < 1e-12);
    }
}
