use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::CsiSource;
use crate::detector::{RidgeWarmStart, SequenceLayout, TrainingHyper};
use crate::reservoir::ReservoirSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Rc,
    Lmmse,
    Ml,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::Rc => "rc",
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::Ml => "ml",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Paper,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!("unknown profile `{other}` (expected desk or paper)"))),
        }
    }
}

/// Every knob of a simulation, as one flat table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub nt: usize,
    pub nr: usize,
    pub nc: usize,
    pub ncp: usize,
    /// Channel taps.
    pub l: usize,
    /// Pilot symbols per frame.
    pub q: usize,
    /// Data symbols per frame.
    pub nd: usize,
    /// Power-delay-profile decay constant, in taps.
    pub pdp_decay: f64,
    pub snr_grid_db: Vec<f64>,
    pub frames_per_point: usize,
    pub csi_mode: CsiSource,
    pub detectors: Vec<DetectorKind>,

    pub n_neurons: usize,
    pub window: usize,
    pub spectral_radius: f64,
    pub input_scale: f64,
    pub sparsity: f64,
    /// Extra samples of the cyclic block fed before the readout starts.
    pub warmup: usize,
    /// Steps between an input sample and the readout that decides it.
    pub readout_delay: usize,

    pub lr: f64,
    pub readout_lr: f64,
    pub epochs: usize,
    pub neighbor_radius: usize,
    pub warm_start: bool,
    pub ridge_lambda: f64,
    pub ridge_target_scale: f64,
    pub ridge_max_samples: usize,
    pub subcarrier_heads: bool,

    pub master_seed: u64,
}

impl SimConfig {
    /// Small link that sweeps in minutes on one core. The channel is the
    /// full-size one scaled to a quarter of the subcarriers, so neighbouring
    /// subcarriers stay as correlated as they are at full size.
    pub fn desk() -> Self {
        Self {
            nt: 2,
            nr: 2,
            nc: 64,
            ncp: 6,
            l: 3,
            q: 2,
            nd: 20,
            pdp_decay: 0.75,
            snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            frames_per_point: 50,
            csi_mode: CsiSource::Perfect,
            detectors: vec![DetectorKind::Rc, DetectorKind::Lmmse, DetectorKind::Ml],
            n_neurons: 64,
            window: 8,
            spectral_radius: 0.5,
            input_scale: 0.01,
            sparsity: 0.9,
            warmup: 8,
            readout_delay: 4,
            lr: 100.0,
            readout_lr: 0.0,
            epochs: 100,
            neighbor_radius: 4,
            warm_start: true,
            ridge_lambda: 1e-6,
            ridge_target_scale: 0.1,
            ridge_max_samples: 4096,
            subcarrier_heads: true,
            master_seed: 42,
        }
    }

    /// The full-size link: 256 subcarriers, 12 taps, 98 data symbols, 128 neurons.
    pub fn paper() -> Self {
        Self {
            nc: 256,
            ncp: 25,
            l: 12,
            pdp_decay: 3.0,
            nd: 98,
            n_neurons: 128,
            window: 32,
            warmup: 32,
            readout_delay: 16,
            epochs: 200,
            ..Self::desk()
        }
    }

    pub fn profile(p: Profile) -> Self {
        match p {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.nt == 0 || self.nr == 0 || self.nc == 0 {
            return fail("antenna and subcarrier counts must be positive".into());
        }
        if self.q != self.nt {
            return fail(format!("need one pilot symbol per transmit antenna (q = {}, nt = {})", self.q, self.nt));
        }
        if self.ncp >= self.nc {
            return fail(format!("cyclic prefix {} must be shorter than nc = {}", self.ncp, self.nc));
        }
        if self.l == 0 || self.l > self.ncp + 1 {
            return fail(format!("channel length {} must lie in 1..={} (ncp + 1)", self.l, self.ncp + 1));
        }
        if self.nd == 0 {
            return fail("need at least one data symbol".into());
        }
        if self.frames_per_point == 0 {
            return fail("frames_per_point must be positive".into());
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return fail("snr grid must be non-empty and free of NaN or -inf".into());
        }
        if self.detectors.is_empty() {
            return fail("no detectors enabled".into());
        }
        let mut seen = self.detectors.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.detectors.len() {
            return fail("detectors listed more than once".into());
        }
        if self.detectors.contains(&DetectorKind::Ml) && self.nt > 3 {
            return fail(format!("exhaustive ML over 16^{} candidates is not supported", self.nt));
        }
        if self.detectors.contains(&DetectorKind::Rc) {
            if self.nt > self.nr {
                return fail(format!("the RC detector needs nt <= nr (nt = {}, nr = {})", self.nt, self.nr));
            }
            self.reservoir_spec().validate()?;
            self.training_hyper().validate(self.nc)?;
        }
        Ok(())
    }

    pub fn reservoir_spec(&self) -> ReservoirSpec {
        ReservoirSpec {
            n_neurons: self.n_neurons,
            window: self.window,
            in_dim: 2 * self.nr,
            out_dim: 2 * self.nr,
            spectral_radius: self.spectral_radius,
            input_scale: self.input_scale,
            sparsity: self.sparsity,
        }
    }

    pub fn layout(&self) -> SequenceLayout {
        SequenceLayout { warmup: self.warmup, delay: self.readout_delay }
    }

    pub fn training_hyper(&self) -> TrainingHyper {
        TrainingHyper {
            lr: self.lr,
            readout_lr: self.readout_lr,
            epochs: self.epochs,
            neighbor_radius: self.neighbor_radius,
            warm_start: self.warm_start.then(|| RidgeWarmStart {
                lambda: self.ridge_lambda,
                target_scale: self.ridge_target_scale,
                max_samples: self.ridge_max_samples,
            }),
            subcarrier_heads: self.subcarrier_heads,
        }
    }
}

/// Reads a TOML config holding every [`SimConfig`] field; unknown keys are rejected.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let cfg: SimConfig = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {}", path.as_ref().display(), e.message())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_config(cfg: &SimConfig, path: impl AsRef<Path>) -> Result<()> {
    let text = toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_profile_parameters() {
        let p = SimConfig::paper();
        assert_eq!((p.l, p.nr, p.nt, p.nc, p.ncp, p.q, p.nd), (12, 2, 2, 256, 25, 2, 98));
        assert_eq!((p.n_neurons, p.window), (128, 32));
        p.validate().unwrap();
        SimConfig::desk().validate().unwrap();
    }

    #[test]
    fn round_trip_and_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        let cfg = SimConfig { snr_grid_db: vec![-2.5, 7.0], csi_mode: CsiSource::Estimated, ..SimConfig::desk() };
        save_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);

        let text = std::fs::read_to_string(&path).unwrap() + "bogus_key = 3\n";
        std::fs::write(&path, text).unwrap();
        match load_config(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains("bogus_key"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_combinations() {
        for bad in [
            SimConfig { q: 1, ..SimConfig::desk() },
            SimConfig { l: 8, ..SimConfig::desk() },
            SimConfig { nd: 0, ..SimConfig::desk() },
            SimConfig { nt: 4, q: 4, ..SimConfig::desk() },
            SimConfig { neighbor_radius: 32, ..SimConfig::desk() },
            SimConfig { detectors: vec![DetectorKind::Ml, DetectorKind::Ml], ..SimConfig::desk() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
        assert!("lab".parse::<Profile>().is_err());
    }
}
