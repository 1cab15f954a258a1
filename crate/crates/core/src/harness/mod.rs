//! Monte Carlo experiments: frame simulation, detection by every engine,
//! SER aggregation over an SNR grid.
//!
//! SNR is `10·log10(Nt·E_s / σ²)` with `E_s = 10`, the mean received power
//! per antenna and sample over σ² of the complex noise.

mod config;
mod io;
pub mod selftest;

pub use config::{load_config, save_config, DetectorKind, Profile, SimConfig};
pub use io::{write_frame_dump, write_results, write_results_to, CSV_HEADER};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::baselines::{estimate_channel, lmmse_detect, CsiEstimate, CsiSource, MlDetector, DEFAULT_ML_CANDIDATE_CAP};
use crate::channel::{add_awgn, propagate, sample_channel, taps_from_freq_response, ChannelTaps};
use crate::detector::{train_bank, Detection, DetectorBank, TrainReport};
use crate::realmap::to_real;
use crate::reservoir::init_reservoir;
use crate::waveform::{ofdm_time_signal, strip_cyclic_prefix, FourierOps, Frame, QAM16_ENERGY};
use crate::{ComplexMat, Error, Result};

/// Per-frame seed: splitmix64 finalizer applied to the master seed, then
/// folded with the SNR and frame indices.
///
/// `mix(m, i, j) = f(f(f(m) ^ i) ^ j)` with `f` the splitmix64 output function
/// (`z += 0x9E3779B97F4A7C15`, then two xor-shift-multiply rounds).
pub fn frame_seed(master_seed: u64, snr_index: usize, frame_index: usize) -> u64 {
    fn f(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    f(f(f(master_seed) ^ snr_index as u64) ^ frame_index as u64)
}

/// Symbol errors of one detector on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorCount {
    pub detector: DetectorKind,
    pub errors: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameStatus {
    Valid,
    /// RC training failed; the frame is excluded from every detector's tally.
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    pub seed: u64,
    pub counts: Vec<ErrorCount>,
    pub status: FrameStatus,
    pub noise_var: f64,
    pub training: Option<TrainReport>,
}

impl FrameResult {
    pub fn count(&self, detector: DetectorKind) -> Option<ErrorCount> {
        self.counts.iter().copied().find(|c| c.detector == detector)
    }
}

/// Everything produced while simulating one frame, kept for inspection.
#[derive(Debug, Clone)]
pub struct FrameTrace {
    pub result: FrameResult,
    pub frame: Frame,
    pub channel: ChannelTaps,
    pub csi: CsiEstimate,
    /// RC detections per data symbol, when RC is enabled and trained.
    pub rc: Option<Vec<Detection>>,
}

fn count_errors(detected: &ComplexMat, truth: &ComplexMat) -> usize {
    detected.iter().zip(truth.iter()).filter(|(a, b)| a != b).count()
}

/// Simulates and detects one block-fading frame.
pub fn run_frame(cfg: &SimConfig, snr_db: f64, seed: u64) -> Result<FrameResult> {
    Ok(trace_frame(cfg, snr_db, seed)?.result)
}

/// [`run_frame`] keeping the frame, channel, CSI and RC posteriors.
pub fn trace_frame(cfg: &SimConfig, snr_db: f64, seed: u64) -> Result<FrameTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fourier = FourierOps::new(cfg.nc)?;
    let channel = sample_channel(cfg.l, cfg.nr, cfg.nt, cfg.pdp_decay, &mut rng)?;
    let frame = Frame::random(cfg.nt, cfg.nc, cfg.ncp, cfg.nd, &mut rng)?;

    let signal_power = QAM16_ENERGY * cfg.nt as f64;
    let mut noise_var = 0.0;
    let mut received = Vec::with_capacity(cfg.q + cfg.nd);
    for x in frame.symbols() {
        let rx = propagate(&ofdm_time_signal(x, &fourier, cfg.ncp)?, &channel)?;
        let (y, var) = add_awgn(&strip_cyclic_prefix(&rx, cfg.ncp)?, snr_db, signal_power, &mut rng)?;
        noise_var = var;
        received.push(y);
    }
    let (rx_pilots, rx_data) = received.split_at(cfg.q);
    let yf_pilots: Vec<ComplexMat> = rx_pilots.iter().map(|y| fourier.to_freq(y)).collect();

    let (csi, shift_taps) = match cfg.csi_mode {
        CsiSource::Perfect => (CsiEstimate::perfect(&channel, &fourier, noise_var), channel.clone()),
        CsiSource::Estimated => {
            let csi = estimate_channel(&yf_pilots, &frame.pilots, noise_var)?;
            let taps = taps_from_freq_response(&csi.g, cfg.l)?;
            (csi, taps)
        }
    };

    let mut counts = Vec::new();
    let mut status = FrameStatus::Valid;
    let mut training = None;
    let mut rc = None;
    let total = cfg.nt * cfg.nc;
    for &kind in &cfg.detectors {
        let mut errors = 0;
        match kind {
            DetectorKind::Ml => {
                let ml = MlDetector::new(&csi, DEFAULT_ML_CANDIDATE_CAP)?;
                for (y, x) in rx_data.iter().zip(&frame.data) {
                    errors += count_errors(&ml.detect(&fourier.to_freq(y))?, x);
                }
            }
            DetectorKind::Lmmse => {
                for (y, x) in rx_data.iter().zip(&frame.data) {
                    errors += count_errors(&lmmse_detect(&fourier.to_freq(y), &csi)?, x);
                }
            }
            DetectorKind::Rc => {
                let reservoir = init_reservoir(&cfg.reservoir_spec(), &mut rng)?;
                let mut bank = DetectorBank::new(reservoir, &shift_taps, &fourier, cfg.layout())?;
                let yr_pilots: Vec<_> = rx_pilots.iter().map(to_real).collect();
                match train_bank(&mut bank, &frame.pilots, &yr_pilots, &fourier, &cfg.training_hyper()) {
                    Ok(report) => training = Some(report),
                    Err(e @ Error::TrainingDiverged { .. }) => {
                        log::warn!("frame seed {seed}: {e}");
                        status = FrameStatus::Invalid(e.to_string());
                        counts.push(ErrorCount { detector: kind, errors: 0, total: 0 });
                        continue;
                    }
                    Err(e) => return Err(e),
                }
                let yr_data: Vec<_> = rx_data.iter().map(to_real).collect();
                let detections = bank.detect_frame(&yr_data)?;
                for (d, x) in detections.iter().zip(&frame.data) {
                    errors += count_errors(&d.symbols, x);
                }
                rc = Some(detections);
            }
        }
        counts.push(ErrorCount { detector: kind, errors, total: total * cfg.nd });
    }
    Ok(FrameTrace {
        result: FrameResult { seed, counts, status, noise_var, training },
        frame,
        channel,
        csi,
        rc,
    })
}

/// Aggregated SER of one detector at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SerRecord {
    pub snr_db: f64,
    pub detector: DetectorKind,
    pub csi_mode: CsiSource,
    pub symbol_errors: usize,
    pub symbols_total: usize,
    pub ser: f64,
    pub frames: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvalidFrame {
    pub snr_db: f64,
    pub frame_index: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutcome {
    pub records: Vec<SerRecord>,
    pub invalid: Vec<InvalidFrame>,
}

/// Runs `frames_per_point` frames at every SNR; records follow the grid
/// order, then the configured detector order.
pub fn sweep(cfg: &SimConfig) -> Result<SweepOutcome> {
    sweep_with(cfg, |_, _, _| {})
}

/// [`sweep`] with a callback after each frame `(snr_index, frame_index, result)`.
pub fn sweep_with(cfg: &SimConfig, mut progress: impl FnMut(usize, usize, &FrameResult)) -> Result<SweepOutcome> {
    cfg.validate()?;
    let mut out = SweepOutcome::default();
    for (si, &snr) in cfg.snr_grid_db.iter().enumerate() {
        let mut tallies: Vec<(usize, usize)> = vec![(0, 0); cfg.detectors.len()];
        let mut frames = 0;
        for fi in 0..cfg.frames_per_point {
            let seed = frame_seed(cfg.master_seed, si, fi);
            let res = run_frame(cfg, snr, seed)?;
            progress(si, fi, &res);
            if let FrameStatus::Invalid(reason) = &res.status {
                out.invalid.push(InvalidFrame { snr_db: snr, frame_index: fi, seed, reason: reason.clone() });
                continue;
            }
            frames += 1;
            for (t, c) in tallies.iter_mut().zip(&res.counts) {
                t.0 += c.errors;
                t.1 += c.total;
            }
        }
        for (&detector, (errors, total)) in cfg.detectors.iter().zip(tallies) {
            out.records.push(SerRecord {
                snr_db: snr,
                detector,
                csi_mode: cfg.csi_mode,
                symbol_errors: errors,
                symbols_total: total,
                ser: if total == 0 { 0.0 } else { errors as f64 / total as f64 },
                frames,
                seed: cfg.master_seed,
            });
        }
    }
    Ok(out)
}
