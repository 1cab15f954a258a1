//! Pilot-driven training of the shared readout and the binary heads.
//!
//! Each pilot symbol yields two samples per coordinate: the received pilot
//! moved along the coordinate's shift vector so that the coordinate reads
//! `+1`, and the same with `−1`. Neighbouring subcarriers lend their samples
//! too, with the readout frequency-shifted onto the head's subcarrier.
//!
//! The loss is the sum over heads of the mean binary cross-entropy, minimized
//! by full-batch gradient descent on `W1` and all head weights.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::{init_head, sigmoid, DetectorBank, HeadKey};
use crate::linalg::solve_spd;
use crate::realmap::{Coord, Part, RealStack};
use crate::reservoir::BatchRun;
use crate::waveform::FourierOps;
use crate::{ComplexMat, Error, Result};

/// One supervised example for a binary head.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySample {
    /// `+1` or `−1`.
    pub label: i8,
    /// `Ỹ_k − x̃·S̃ + label·S̃`.
    pub input: RealStack,
    /// Pilot the sample was derived from.
    pub pilot: usize,
    /// Multiple of `S̃` added to the received pilot: `label − x̃`.
    pub shift_coef: f64,
}

/// Reference to a sample of another head, used at a subcarrier offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborSample {
    pub source: HeadKey,
    /// Index into the source head's training set.
    pub sample: usize,
    /// `nsc − nsc′`, the shift applied to the readout spectrum.
    pub offset: isize,
}

/// Initial least-squares fit of `W1`: before gradient descent the readout is
/// fitted to reproduce the received pilot samples it is aligned with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeWarmStart {
    /// Ridge weight relative to the mean state energy.
    pub lambda: f64,
    /// RMS of the fitted readout per real stream.
    pub target_scale: f64,
    /// At most this many samples enter the fit (evenly strided).
    pub max_samples: usize,
}

impl Default for RidgeWarmStart {
    fn default() -> Self {
        Self { lambda: 1e-6, target_scale: 0.1, max_samples: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingHyper {
    /// Step size for the head weights.
    pub lr: f64,
    /// Step size for the shared readout `W1`.
    pub readout_lr: f64,
    pub epochs: usize,
    /// Subcarriers on each side whose samples a head also trains on.
    pub neighbor_radius: usize,
    pub warm_start: Option<RidgeWarmStart>,
    /// Restrict head updates to the DFT rows of the head's own subcarrier.
    pub subcarrier_heads: bool,
}

impl Default for TrainingHyper {
    fn default() -> Self {
        Self { lr: 0.01, readout_lr: 0.01, epochs: 200, neighbor_radius: 2, warm_start: Some(RidgeWarmStart::default()), subcarrier_heads: true }
    }
}

impl TrainingHyper {
    pub fn validate(&self, nc: usize) -> Result<()> {
        for (name, v) in [("lr", self.lr), ("readout_lr", self.readout_lr)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if 2 * self.neighbor_radius >= nc {
            return Err(Error::Config(format!(
                "neighbour radius {} must stay below Nc/2 = {}",
                self.neighbor_radius,
                nc / 2
            )));
        }
        if let Some(w) = &self.warm_start {
            if !(w.lambda > 0.0) || !(w.target_scale > 0.0) || w.max_samples == 0 {
                return Err(Error::Config("ridge warm start needs positive lambda, scale and sample count".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-head loss before each update.
    pub losses: Vec<f64>,
    pub norm: f64,
    pub samples: usize,
}

/// Training pairs of one head: for each pilot, `(+1, …)` then `(−1, …)`.
pub fn build_binary_training_set(
    bank: &DetectorBank,
    key: HeadKey,
    pilots: &[ComplexMat],
    yr_pilots: &[RealStack],
) -> Result<Vec<BinarySample>> {
    if pilots.len() != yr_pilots.len() || pilots.is_empty() {
        return Err(Error::Shape(format!(
            "{} pilot blocks for {} received pilots",
            pilots.len(),
            yr_pilots.len()
        )));
    }
    let s = &bank.shift(key)?.s;
    let mut out = Vec::with_capacity(2 * pilots.len());
    for (q, (x, y)) in pilots.iter().zip(yr_pilots).enumerate() {
        if x.dim() != (bank.nt, bank.nc) {
            return Err(Error::Shape(format!("pilot {q} is {:?}", x.dim())));
        }
        bank.check_received(y)?;
        let xt = key.part.of(x[[key.ntx, key.nsc]]);
        for label in [1i8, -1] {
            let coef = label as f64 - xt;
            out.push(BinarySample { label, input: y.axpy(coef, s), pilot: q, shift_coef: coef });
        }
    }
    Ok(out)
}

/// Samples a head trains on: its own (offset 0) and every sample of the heads
/// `radius` subcarriers either side on the same stream and part.
pub fn augment_neighbors(key: HeadKey, nc: usize, radius: usize, per_head: usize) -> Result<Vec<NeighborSample>> {
    if 2 * radius >= nc {
        return Err(Error::Config(format!("neighbour radius {radius} must stay below Nc/2 for Nc = {nc}")));
    }
    let r = radius as isize;
    let mut out = Vec::with_capacity((2 * radius + 1) * per_head);
    for d in -r..=r {
        let nsc = (key.nsc as isize + d).rem_euclid(nc as isize) as usize;
        let source = Coord::new(key.ntx, nsc, key.part);
        out.extend((0..per_head).map(|sample| NeighborSample { source, sample, offset: -d }));
    }
    Ok(out)
}

/// Gradient of the loss with respect to one head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrad {
    pub w_neg: Array1<f64>,
    pub w_pos: Array1<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Use {
    sample: usize,
    offset: usize,
    target: f64,
}

/// Reservoir states of every training sample plus the sample-to-head wiring.
///
/// States do not depend on the trainable weights, so they are computed once.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    nc: usize,
    nr: usize,
    norm: f64,
    /// Aligned states per base sample, `n × Nc`.
    states: Vec<Array2<f64>>,
    /// Base samples in head order, `2Q` per head.
    samples: Vec<(HeadKey, BinarySample)>,
    uses: Vec<Vec<Use>>,
    offsets: Vec<isize>,
    cos: Array2<f64>,
    sin: Array2<f64>,
}

impl TrainingProblem {
    pub fn build(bank: &DetectorBank, pilots: &[ComplexMat], yr_pilots: &[RealStack], radius: usize) -> Result<Self> {
        let (nt, nr, nc) = bank.dims();
        let n = bank.reservoir().n_neurons();
        let mut samples = Vec::new();
        for key in Coord::all(nt, nc) {
            for s in build_binary_training_set(bank, key, pilots, yr_pilots)? {
                samples.push((key, s));
            }
        }
        let per_head = 2 * pilots.len();

        let offsets: Vec<isize> = (-(radius as isize)..=radius as isize).collect();
        let uses = Coord::all(nt, nc)
            .map(|key| {
                Ok(augment_neighbors(key, nc, radius, per_head)?
                    .into_iter()
                    .map(|nb| {
                        let sample = nb.source.index(nt, nc) * per_head + nb.sample;
                        Use {
                            sample,
                            offset: (nb.offset + radius as isize) as usize,
                            target: if samples[sample].1.label > 0 { 1.0 } else { 0.0 },
                        }
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<Use>>>>()?;

        let bases = yr_pilots.iter().map(|y| bank.received_drive(y)).collect::<Result<Vec<_>>>()?;
        let runs: Vec<BatchRun> = samples
            .iter()
            .map(|(key, s)| BatchRun { base: s.pilot, shift: Some(key.index(nt, nc)), coef: s.shift_coef })
            .collect();
        let b = runs.len();
        let mut states = vec![Array2::zeros((n, nc)); b];
        let start = bank.layout().first_aligned();
        bank.reservoir().run_batch(&bases, bank.shift_drives(), &runs, |t, s| {
            if t < start || t >= start + nc {
                return;
            }
            let k = t - start;
            for i in 0..n {
                for (run, st) in states.iter_mut().enumerate() {
                    st[[i, k]] = s[i * b + run];
                }
            }
        });

        let angle = |o: isize, k: usize| 2.0 * PI * (o * k as isize) as f64 / nc as f64;
        let cos = Array2::from_shape_fn((offsets.len(), nc), |(oi, k)| angle(offsets[oi], k).cos());
        let sin = Array2::from_shape_fn((offsets.len(), nc), |(oi, k)| angle(offsets[oi], k).sin());
        Ok(Self { nc, nr, norm: bank.norm(), states, samples, uses, offsets, cos, sin })
    }

    pub fn n_samples(&self) -> usize {
        self.states.len()
    }

    /// Multiplies each readout stream by `exp(±2πi·o·k/Nc)`; `adjoint` uses the minus sign.
    fn rotate(&self, z: &[f64], oi: usize, adjoint: bool, out: &mut [f64]) {
        let (nr, nc) = (self.nr, self.nc);
        let sign = if adjoint { -1.0 } else { 1.0 };
        for r in 0..nr {
            for k in 0..nc {
                let (c, s) = (self.cos[[oi, k]], sign * self.sin[[oi, k]]);
                let (re, im) = (z[r * nc + k], z[(nr + r) * nc + k]);
                out[r * nc + k] = re * c - im * s;
                out[(nr + r) * nc + k] = re * s + im * c;
            }
        }
    }

    fn features(&self, w1: &Array2<f64>) -> Vec<Array2<f64>> {
        self.states.iter().map(|s| w1.dot(s).mapv(crate::reservoir::tanh)).collect()
    }

    /// Sum over heads of the mean binary cross-entropy.
    pub fn loss(&self, bank: &DetectorBank) -> f64 {
        self.evaluate(bank, false).0
    }

    /// Loss and its gradients with respect to `W1` and every head.
    pub fn loss_and_grad(&self, bank: &DetectorBank) -> (f64, Array2<f64>, Vec<HeadGrad>) {
        let (loss, grads) = self.evaluate(bank, true);
        let (w1, heads) = grads.expect("gradients requested");
        (loss, w1, heads)
    }

    fn evaluate(&self, bank: &DetectorBank, want_grad: bool) -> (f64, Option<(Array2<f64>, Vec<HeadGrad>)>) {
        let z = self.features(&bank.reservoir().w1);
        self.evaluate_on(bank, &z, want_grad, want_grad)
    }

    /// Loss and gradients for precomputed features `z`; `readout` adds the `W1` gradient.
    fn evaluate_on(
        &self,
        bank: &DetectorBank,
        z: &[Array2<f64>],
        want_grad: bool,
        readout: bool,
    ) -> (f64, Option<(Array2<f64>, Vec<HeadGrad>)>) {
        let w1 = &bank.reservoir().w1;
        let len = 2 * self.nr * self.nc;
        let mut dz = if readout { vec![Array2::zeros((2 * self.nr, self.nc)); z.len()] } else { Vec::new() };
        let mut head_grads = Vec::new();
        let mut loss = 0.0;
        let mut rotated = vec![vec![0.0; len]; self.offsets.len()];
        let mut acc = vec![vec![0.0; len]; self.offsets.len()];
        let mut tmp = vec![0.0; len];
        for (head, uses) in bank.heads().iter().zip(&self.uses) {
            let diff = head.diff();
            let diff = diff.as_slice().expect("contiguous");
            for (oi, r) in rotated.iter_mut().enumerate() {
                self.rotate(diff, oi, true, r);
            }
            acc.iter_mut().for_each(|a| a.iter_mut().for_each(|v| *v = 0.0));
            let weight = 1.0 / uses.len() as f64;
            for u in uses {
                let zi = z[u.sample].as_slice().expect("contiguous");
                let w = &rotated[u.offset];
                let d: f64 = w.iter().zip(zi).map(|(a, b)| a * b).sum();
                loss += weight * (softplus(d) - u.target * d);
                if want_grad {
                    let g = weight * (sigmoid(d) - u.target);
                    if readout {
                        let dzi = dz[u.sample].as_slice_mut().expect("contiguous");
                        for (o, a) in dzi.iter_mut().zip(w) {
                            *o += g * a;
                        }
                    }
                    for (o, a) in acc[u.offset].iter_mut().zip(zi) {
                        *o += g * a;
                    }
                }
            }
            if want_grad {
                let mut g = Array1::<f64>::zeros(len);
                for (oi, a) in acc.iter().enumerate() {
                    self.rotate(a, oi, false, &mut tmp);
                    for (o, v) in g.iter_mut().zip(&tmp) {
                        *o += v;
                    }
                }
                head_grads.push(HeadGrad { w_neg: g.mapv(|v: f64| -v), w_pos: g });
            }
        }
        if !want_grad {
            return (loss, None);
        }
        let mut dw1 = Array2::zeros(w1.dim());
        if !readout {
            return (loss, Some((dw1, head_grads)));
        }
        for ((zi, dzi), si) in z.iter().zip(&mut dz).zip(&self.states) {
            Zip::from(&mut *dzi).and(zi).for_each(|d, &v| *d *= 1.0 - v * v);
            ndarray::linalg::general_mat_mul(1.0, dzi, &si.t(), 1.0, &mut dw1);
        }
        (loss, Some((dw1, head_grads)))
    }

    /// Least-squares readout that reproduces each sample's own normalized input,
    /// scaled to `target_scale` per real stream.
    fn ridge_fit(&self, warm: &RidgeWarmStart) -> Result<Array2<f64>> {
        let n = self.states[0].nrows();
        let out_dim = 2 * self.nr;
        let len = self.states.len();
        let stride = len.div_ceil(warm.max_samples.max(1));
        // jitter the stride so every sample slot (label, pilot) is represented
        let picks = (0..len.div_ceil(stride)).map(|j| j * stride + j % stride).filter(|&i| i < len);
        let mut gram = Array2::<f64>::zeros((n, n));
        let mut cross = Array2::<f64>::zeros((n, out_dim));
        for i in picks {
            let t = self.samples[i].1.input.data() * (warm.target_scale / self.norm);
            let s = &self.states[i];
            ndarray::linalg::general_mat_mul(1.0, s, &s.t(), 1.0, &mut gram);
            ndarray::linalg::general_mat_mul(1.0, s, &t.t(), 1.0, &mut cross);
        }
        let ridge = warm.lambda * gram.diag().sum() / n as f64;
        for i in 0..n {
            gram[[i, i]] += ridge.max(f64::MIN_POSITIVE);
        }
        Ok(solve_spd(gram, &cross)?.reversed_axes())
    }
}

/// Mean per-head loss treated as divergence even though still finite
/// (bounded readouts keep the loss finite under absurd step sizes).
const LOSS_BLOWUP: f64 = 1e100;

fn softplus(d: f64) -> f64 {
    d.max(0.0) + (-d.abs()).exp().ln_1p()
}

fn finite(a: &Array2<f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Orthonormal DFT rows of every readout stream, per subcarrier.
fn subcarrier_spans(fourier: &FourierOps, nr: usize) -> Vec<Vec<Array1<f64>>> {
    (0..fourier.nc())
        .map(|nsc| {
            (0..nr)
                .flat_map(|r| [Part::Re, Part::Im].map(|p| init_head(r, nsc, p, fourier, nr).w_pos))
                .collect()
        })
        .collect()
}

/// Trains `bank` on the received pilots of one frame.
///
/// Sets the input normalization to the RMS of the received pilots, builds
/// the shifted sample sets, optionally warm-starts `W1`, then runs
/// `hyper.epochs` full-batch gradient steps.
pub fn train_bank(
    bank: &mut DetectorBank,
    pilots: &[ComplexMat],
    yr_pilots: &[RealStack],
    fourier: &FourierOps,
    hyper: &TrainingHyper,
) -> Result<TrainReport> {
    let (nt, _, nc) = bank.dims();
    hyper.validate(nc)?;
    if yr_pilots.is_empty() || yr_pilots.len() != pilots.len() {
        return Err(Error::Shape(format!("{} pilots for {} received blocks", pilots.len(), yr_pilots.len())));
    }
    let count: usize = yr_pilots.iter().map(|y| y.data().len()).sum();
    let energy: f64 = yr_pilots.iter().flat_map(|y| y.data().iter()).map(|v| v * v).sum();
    let norm = (energy / count as f64).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numeric(format!("received pilots have RMS {norm}")));
    }
    bank.set_norm(norm)?;
    if hyper.epochs == 0 && hyper.warm_start.is_none() {
        return Ok(TrainReport { losses: Vec::new(), norm, samples: 0 });
    }

    let problem = TrainingProblem::build(bank, pilots, yr_pilots, hyper.neighbor_radius)?;
    if let Some(warm) = &hyper.warm_start {
        let w1 = problem.ridge_fit(warm)?;
        if !finite(&w1) {
            return Err(Error::TrainingDiverged { epoch: 0, lr: hyper.lr, reason: "ridge warm start".into() });
        }
        *bank.w1_mut() = w1;
    }

    let heads = bank.heads().len() as f64;
    let mut losses = Vec::with_capacity(hyper.epochs);
    let spans = hyper.subcarrier_heads.then(|| subcarrier_spans(fourier, bank.dims().1));
    // a frozen readout lets the features be computed once
    let frozen = (hyper.readout_lr == 0.0).then(|| problem.features(&bank.reservoir().w1));
    for epoch in 0..hyper.epochs {
        let (loss, dw1, grads) = match &frozen {
            Some(z) => {
                let (loss, g) = problem.evaluate_on(bank, z, true, false);
                let (dw1, grads) = g.expect("gradients requested");
                (loss, dw1, grads)
            }
            None => problem.loss_and_grad(bank),
        };
        let mean = loss / heads;
        if !mean.is_finite() || mean > LOSS_BLOWUP || !finite(&dw1) {
            return Err(Error::TrainingDiverged { epoch, lr: hyper.lr, reason: format!("mean loss {mean:e}") });
        }
        losses.push(mean);
        bank.w1_mut().scaled_add(-hyper.readout_lr, &dw1);
        for (idx, (h, g)) in bank.heads_mut().iter_mut().zip(&grads).enumerate() {
            match &spans {
                Some(spans) => {
                    for b in &spans[Coord::from_index(idx, nt, nc).nsc] {
                        h.w_pos.scaled_add(-hyper.lr * b.dot(&g.w_pos), b);
                        h.w_neg.scaled_add(-hyper.lr * b.dot(&g.w_neg), b);
                    }
                }
                None => {
                    h.w_pos.scaled_add(-hyper.lr, &g.w_pos);
                    h.w_neg.scaled_add(-hyper.lr, &g.w_neg);
                }
            }
        }
        if bank.heads().iter().any(|h| h.w_pos.iter().chain(h.w_neg.iter()).any(|v| !v.is_finite())) {
            return Err(Error::TrainingDiverged { epoch, lr: hyper.lr, reason: "non-finite head weights".into() });
        }
    }
    log::debug!("trained {} samples, loss {:?} -> {:?}", problem.n_samples(), losses.first(), losses.last());
    Ok(TrainReport { losses, norm, samples: problem.n_samples() })
}
