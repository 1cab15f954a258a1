//! Windowed echo-state reservoir with a trainable linear readout.
//!
//! State update: `s[t] = tanh(W_res·s[t−1] + W_in·buf[t])`, `s[−1] = 0`, where
//! `buf[t]` stacks the inputs `u[t−window+1..=t]` (zeros before `t = 0`),
//! oldest first. Readout: `tanh(W1·s[t])`. Only `W1` is ever trained.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::spectral_radius;
use crate::realmap::RealStack;
use crate::{Error, Result};

/// Shape and scaling of the fixed reservoir layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    pub n_neurons: usize,
    pub window: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    /// Fraction of recurrent weights forced to zero.
    pub sparsity: f64,
}

impl Default for ReservoirSpec {
    fn default() -> Self {
        Self {
            n_neurons: 128,
            window: 32,
            in_dim: 4,
            out_dim: 4,
            spectral_radius: 0.9,
            input_scale: 0.5,
            sparsity: 0.9,
        }
    }
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_neurons == 0 || self.window == 0 || self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::Config("reservoir dimensions must be positive".into()));
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius < 1.0) {
            return Err(Error::Config(format!(
                "spectral radius must lie in (0, 1), got {}",
                self.spectral_radius
            )));
        }
        if !(self.input_scale > 0.0) || !self.input_scale.is_finite() {
            return Err(Error::Config(format!("input scale must be positive, got {}", self.input_scale)));
        }
        if !(0.0..1.0).contains(&self.sparsity) {
            return Err(Error::Config(format!("sparsity must lie in [0, 1), got {}", self.sparsity)));
        }
        Ok(())
    }

    pub fn buffer_len(&self) -> usize {
        self.in_dim * self.window
    }
}

/// Compressed-row copy of the recurrent matrix.
#[derive(Debug, Clone, PartialEq)]
struct SparseRows {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn from_dense(a: &Array2<f64>) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in a.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, vals }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }
}

/// `tanh` through a branch-free polynomial `exp`; absolute error below 1e−15.
#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    // 1.5·2^52: adding it rounds to an integer held in the low mantissa bits
    const ROUND: f64 = 6_755_399_441_055_744.0;
    const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
    let y = (2.0 * x).clamp(-60.0, 60.0);
    let t = y * std::f64::consts::LOG2_E + ROUND;
    let k = t - ROUND;
    let r = y - k * LN2_HI - k * LN2_LO;
    let mut p = 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    let e = p * f64::from_bits(t.to_bits().wrapping_add(1023) << 52);
    (e - 1.0) / (e + 1.0)
}

/// Fixed input and recurrent layers plus the trainable readout `W1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights {
    spec: ReservoirSpec,
    w_in: Array2<f64>,
    w_res: Array2<f64>,
    sparse: SparseRows,
    /// Readout, `out_dim × n_neurons`.
    pub w1: Array2<f64>,
}

/// One sequence of a batched reservoir run: drive `bases[base] + coef·shifts[shift]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRun {
    pub base: usize,
    pub shift: Option<usize>,
    pub coef: f64,
}

const MAX_DRAWS: usize = 10;

/// Draws the fixed layers and zeroes the readout.
pub fn init_reservoir<R: Rng + ?Sized>(spec: &ReservoirSpec, rng: &mut R) -> Result<ReservoirWeights> {
    spec.validate()?;
    let n = spec.n_neurons;
    for _ in 0..MAX_DRAWS {
        let mut w_res = Array2::from_shape_simple_fn((n, n), || rng.random_range(-1.0..1.0));
        let zeros = (spec.sparsity * (n * n) as f64).round() as usize;
        for idx in sample(rng, n * n, zeros.min(n * n)) {
            w_res[[idx / n, idx % n]] = 0.0;
        }
        let radius = spectral_radius(&w_res);
        if !(radius > 1e-12) {
            continue;
        }
        w_res *= spec.spectral_radius / radius;
        let w_in = Array2::from_shape_simple_fn((n, spec.buffer_len()), || {
            rng.random_range(-spec.input_scale..spec.input_scale)
        });
        return Ok(ReservoirWeights::from_parts(spec.clone(), w_in, w_res, Array2::zeros((spec.out_dim, n))));
    }
    Err(Error::Numeric(format!(
        "recurrent matrix degenerate after {MAX_DRAWS} draws (n = {n}, sparsity = {})",
        spec.sparsity
    )))
}

impl ReservoirWeights {
    /// Assembles weights from explicit matrices.
    ///
    /// Panics if the shapes disagree with `spec`.
    pub fn from_parts(spec: ReservoirSpec, w_in: Array2<f64>, w_res: Array2<f64>, w1: Array2<f64>) -> Self {
        let n = spec.n_neurons;
        assert_eq!(w_in.dim(), (n, spec.buffer_len()), "W_in shape");
        assert_eq!(w_res.dim(), (n, n), "W_res shape");
        assert_eq!(w1.dim(), (spec.out_dim, n), "W1 shape");
        let sparse = SparseRows::from_dense(&w_res);
        Self { spec, w_in, w_res, sparse, w1 }
    }

    pub fn spec(&self) -> &ReservoirSpec {
        &self.spec
    }

    pub fn w_in(&self) -> &Array2<f64> {
        &self.w_in
    }

    pub fn w_res(&self) -> &Array2<f64> {
        &self.w_res
    }

    pub fn n_neurons(&self) -> usize {
        self.spec.n_neurons
    }

    fn check_input(&self, u: &ArrayView2<f64>) -> Result<()> {
        if u.nrows() != self.spec.in_dim {
            return Err(Error::Shape(format!(
                "reservoir input has {} rows, expected {}",
                u.nrows(),
                self.spec.in_dim
            )));
        }
        if u.ncols() == 0 {
            return Err(Error::Shape("reservoir input is empty".into()));
        }
        Ok(())
    }

    /// Input-layer contribution `W_in·buf[t]` for every step, as a `T × n` array.
    /// Linear in `u`.
    pub fn input_drive(&self, u: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&u)?;
        let (d, w, steps) = (self.spec.in_dim, self.spec.window, u.ncols());
        let mut buf = Array2::zeros((steps, d * w));
        for t in 0..steps {
            for k in 0..w {
                // slot k holds u[t − w + 1 + k]
                if let Some(src) = (t + 1 + k).checked_sub(w) {
                    for c in 0..d {
                        buf[[t, k * d + c]] = u[[c, src]];
                    }
                }
            }
        }
        Ok(buf.dot(&self.w_in.t()))
    }

    /// State trajectory (`n × T`) for input `u` (`in_dim × T`).
    pub fn run_states(&self, u: ArrayView2<f64>) -> Result<Array2<f64>> {
        let init = Array1::zeros(self.spec.n_neurons);
        self.run_states_from(u, &init)
    }

    /// As [`run_states`](Self::run_states) but starting from `s[−1] = init`.
    pub fn run_states_from(&self, u: ArrayView2<f64>, init: &Array1<f64>) -> Result<Array2<f64>> {
        if init.len() != self.spec.n_neurons {
            return Err(Error::Shape("initial state has the wrong length".into()));
        }
        let drive = self.input_drive(u)?;
        Ok(self.run_drive(&drive, init))
    }

    /// Recurrence over a precomputed drive (`T × n`); returns `n × T`.
    pub fn run_drive(&self, drive: &Array2<f64>, init: &Array1<f64>) -> Array2<f64> {
        let n = self.spec.n_neurons;
        let mut states = Array2::zeros((n, drive.nrows()));
        let mut prev = init.to_vec();
        let mut next = vec![0.0; n];
        for (t, d) in drive.axis_iter(Axis(0)).enumerate() {
            for i in 0..n {
                let acc: f64 = self.sparse.row(i).map(|(j, w)| w * prev[j]).sum();
                next[i] = tanh(acc + d[i]);
            }
            states.column_mut(t).assign(&Array1::from(next.clone()));
            std::mem::swap(&mut prev, &mut next);
        }
        states
    }

    /// Runs many sequences in lockstep, all from the zero state.
    ///
    /// `bases` and `shifts` are `T × n` drives from [`input_drive`](Self::input_drive).
    /// After each step `t` the visitor receives the states as an
    /// `n × runs.len()` row-major slice.
    pub fn run_batch(
        &self,
        bases: &[Array2<f64>],
        shifts: &[Array2<f64>],
        runs: &[BatchRun],
        mut visit: impl FnMut(usize, &[f64]),
    ) {
        let n = self.spec.n_neurons;
        let b = runs.len();
        let Some(first) = runs.first() else { return };
        let steps = bases[first.base].nrows();
        let mut prev = vec![0.0; n * b];
        let mut next = vec![0.0; n * b];
        for t in 0..steps {
            for (k, run) in runs.iter().enumerate() {
                let base = bases[run.base].row(t);
                match run.shift {
                    Some(s) => {
                        let shift = shifts[s].row(t);
                        for i in 0..n {
                            next[i * b + k] = base[i] + run.coef * shift[i];
                        }
                    }
                    None => {
                        for i in 0..n {
                            next[i * b + k] = base[i];
                        }
                    }
                }
            }
            for i in 0..n {
                let out = &mut next[i * b..(i + 1) * b];
                for (j, w) in self.sparse.row(i) {
                    let src = &prev[j * b..(j + 1) * b];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += w * s;
                    }
                }
                for o in out.iter_mut() {
                    *o = tanh(*o);
                }
            }
            visit(t, &next);
            std::mem::swap(&mut prev, &mut next);
        }
    }
}

/// `tanh(W1·states)`, `out_dim × T`.
pub fn readout(states: &Array2<f64>, w1: &Array2<f64>) -> Result<RealStack> {
    RealStack::new(readout_linear(states, w1)?.mapv(f64::tanh))
}

/// `W1·states` without the output nonlinearity.
pub fn readout_linear(states: &Array2<f64>, w1: &Array2<f64>) -> Result<Array2<f64>> {
    if w1.ncols() != states.nrows() {
        return Err(Error::Shape(format!(
            "readout is {}×{}, states have {} rows",
            w1.nrows(),
            w1.ncols(),
            states.nrows()
        )));
    }
    Ok(w1.dot(states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_spec() -> ReservoirSpec {
        ReservoirSpec { n_neurons: 24, window: 4, in_dim: 2, out_dim: 2, ..Default::default() }
    }

    #[test]
    fn tanh_matches_std() {
        let mut worst: f64 = 0.0;
        for i in -40_000..40_000 {
            let x = i as f64 * 1e-3;
            worst = worst.max((tanh(x) - x.tanh()).abs());
        }
        assert!(worst < 1e-15, "{worst}");
        assert_eq!(tanh(0.0), 0.0);
        assert_eq!(tanh(1e3), 1.0);
        assert_eq!(tanh(-1e3), -1.0);
    }

    #[test]
    fn spectral_radius_and_determinism() {
        let spec = ReservoirSpec::default();
        let a = init_reservoir(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = init_reservoir(&spec, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!((spectral_radius(a.w_res()) - 0.9).abs() < 1e-6);
        assert!(a.w1.iter().all(|&v| v == 0.0));
        let zeros = a.w_res().iter().filter(|&&v| v == 0.0).count();
        assert_eq!(zeros, (0.9 * 128.0 * 128.0f64).round() as usize);
        assert!(a.w_in().iter().all(|v| v.abs() < 0.5));
    }

    #[test]
    fn degenerate_reservoir_is_reported() {
        // a single neuron with sparsity 0.5 rounds to zero kept weights every draw
        let spec = ReservoirSpec { n_neurons: 1, sparsity: 0.5, ..small_spec() };
        assert!(matches!(init_reservoir(&spec, &mut ChaCha8Rng::seed_from_u64(1)), Err(Error::Numeric(_))));
        let bad = ReservoirSpec { spectral_radius: 1.0, ..small_spec() };
        assert!(matches!(init_reservoir(&bad, &mut ChaCha8Rng::seed_from_u64(1)), Err(Error::Config(_))));
    }

    #[test]
    fn zero_input_gives_zero_states() {
        let w = init_reservoir(&small_spec(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let states = w.run_states(Array2::zeros((2, 10)).view()).unwrap();
        assert!(states.iter().all(|&v| v == 0.0));
        assert!(matches!(w.run_states(Array2::zeros((3, 10)).view()), Err(Error::Shape(_))));
    }

    #[test]
    fn run_states_matches_dense_reference() {
        let spec = small_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = init_reservoir(&spec, &mut rng).unwrap();
        let u = Array2::from_shape_simple_fn((2, 9), || rng.random_range(-1.0..1.0));
        let states = w.run_states(u.view()).unwrap();
        let mut s = Array1::<f64>::zeros(spec.n_neurons);
        for t in 0..9 {
            let mut buf = Array1::zeros(spec.buffer_len());
            for k in 0..spec.window {
                let src = t as isize - spec.window as isize + 1 + k as isize;
                if src >= 0 {
                    for c in 0..2 {
                        buf[k * 2 + c] = u[[c, src as usize]];
                    }
                }
            }
            s = (w.w_res().dot(&s) + w.w_in().dot(&buf)).mapv(f64::tanh);
            for i in 0..spec.n_neurons {
                assert!((s[i] - states[[i, t]]).abs() < 1e-13);
            }
        }
        assert!(states.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn batch_matches_single_runs() {
        let spec = small_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = init_reservoir(&spec, &mut rng).unwrap();
        let u0 = Array2::from_shape_simple_fn((2, 7), || rng.random_range(-1.0..1.0));
        let u1 = Array2::from_shape_simple_fn((2, 7), || rng.random_range(-1.0..1.0));
        let bases = vec![w.input_drive(u0.view()).unwrap()];
        let shifts = vec![w.input_drive(u1.view()).unwrap()];
        let runs = [
            BatchRun { base: 0, shift: None, coef: 0.0 },
            BatchRun { base: 0, shift: Some(0), coef: -1.5 },
        ];
        let mut got = vec![Array2::zeros((spec.n_neurons, 7)); 2];
        w.run_batch(&bases, &shifts, &runs, |t, s| {
            for i in 0..spec.n_neurons {
                got[0][[i, t]] = s[i * 2];
                got[1][[i, t]] = s[i * 2 + 1];
            }
        });
        let expect0 = w.run_states(u0.view()).unwrap();
        let expect1 = w.run_states((&u0 - &(&u1 * 1.5)).view()).unwrap();
        for (g, e) in got.iter().zip([expect0, expect1]) {
            assert!(g.iter().zip(e.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn readout_shapes_and_range() {
        let states = Array2::from_shape_fn((3, 5), |(i, t)| (i as f64 - t as f64) * 0.4);
        let zero = readout(&states, &Array2::zeros((2, 3))).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
        let w1 = Array2::from_elem((2, 3), 2.0);
        assert!(readout(&states, &w1).unwrap().data().iter().all(|v| v.abs() < 1.0));
        assert!(matches!(readout(&states, &Array2::zeros((2, 4))), Err(Error::Shape(_))));
    }
}
