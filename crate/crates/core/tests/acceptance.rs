//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any hard criterion fails. The neighbour ablation is soft
//! and prints FLAG instead of failing.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcmimo::baselines::CsiSource;
use rcmimo::channel::{forward, freq_domain_channel, propagate, sample_channel};
use rcmimo::detector::{solve_posterior_chain, DetectorBank, SequenceLayout, TrainingProblem};
use rcmimo::harness::selftest::{noiseless_baselines, rc_identity_toy};
use rcmimo::harness::{save_config, sweep, DetectorKind, SerRecord, SimConfig};
use rcmimo::realmap::{real_forward, to_real};
use rcmimo::reservoir::{init_reservoir, ReservoirSpec};
use rcmimo::waveform::{build_pilots, ofdm_time_signal, random_qam16, strip_cyclic_prefix, FourierOps};

struct Outcome {
    passed: bool,
    soft: bool,
    detail: String,
}

fn hard(passed: bool, detail: String) -> Outcome {
    Outcome { passed, soft: false, detail }
}

fn max_abs<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn model_equivalence() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let nc = [8, 64][i % 2];
        let l = [1, 4, 12][i % 3];
        let ops = FourierOps::new(nc).unwrap();
        let ch = sample_channel(l, 2, 2, 3.0, &mut rng).unwrap();
        let x = random_qam16(2, nc, &mut rng);
        let complex = to_real(&forward(&x, &ch, &ops).unwrap());
        let real = real_forward(&to_real(&x), &ch, &ops).unwrap();
        worst = worst.max(max_abs(complex.data().iter(), real.data().iter()));
    }
    let secs = t.elapsed().as_secs_f64();
    hard(worst < 1e-10 && secs < 10.0, format!("max abs {worst:.2e} over 100 instances in {secs:.2} s"))
}

fn diagonalization() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let desk = SimConfig::desk();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        // alternate the desk link with a long channel under a long prefix
        let (nc, ncp, l, decay) = if i % 2 == 0 { (desk.nc, desk.ncp, desk.l, desk.pdp_decay) } else { (64, 16, 12, 3.0) };
        let ops = FourierOps::new(nc).unwrap();
        let ch = sample_channel(l, 2, 2, decay, &mut rng).unwrap();
        let x = random_qam16(2, nc, &mut rng);
        let rx = strip_cyclic_prefix(&propagate(&ofdm_time_signal(&x, &ops, ncp).unwrap(), &ch).unwrap(), ncp).unwrap();
        let yf = ops.to_freq(&rx);
        for (j, g) in freq_domain_channel(&ch, &ops).iter().enumerate() {
            for (a, b) in g.dot(&x.column(j)).iter().zip(yf.column(j)) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    hard(worst < 1e-9 && secs < 10.0, format!("max abs {worst:.2e} over 50 channels in {secs:.2} s"))
}

fn noiseless_exactness() -> Outcome {
    let desk = SimConfig::desk();
    let base = noiseless_baselines(&desk, 10, 103).unwrap();
    let toy = SimConfig { nd: 4, ..desk };
    let (rc, total) = rc_identity_toy(&toy, 2, 104).unwrap();
    hard(base == 0 && rc == 0, format!("ML+LMMSE {base} errors over 10 frames, RC identity toy {rc}/{total}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let nc = 4;
    let ops = FourierOps::new(nc).unwrap();
    let spec = ReservoirSpec { n_neurons: 3, window: 2, in_dim: 4, out_dim: 4, sparsity: 0.0, ..Default::default() };
    let mut res = init_reservoir(&spec, &mut rng).unwrap();
    res.w1 = Array2::from_shape_simple_fn((4, 3), || rng.random_range(-0.5..0.5));
    let ch = sample_channel(2, 2, 2, 1.0, &mut rng).unwrap();
    let mut bank = DetectorBank::new(res, &ch, &ops, SequenceLayout::for_window(2)).unwrap();
    for h in bank.heads_mut() {
        h.w_pos.mapv_inplace(|v| v + rng.random_range(-0.3..0.3));
        h.w_neg.mapv_inplace(|v| v + rng.random_range(-0.3..0.3));
    }
    let pilots = build_pilots(2, nc, &mut rng).unwrap();
    let yr: Vec<_> = pilots.iter().map(|p| to_real(&forward(p, &ch, &ops).unwrap())).collect();
    bank.set_norm(2.0).unwrap();
    let problem = TrainingProblem::build(&bank, &pilots, &yr, 1).unwrap();
    let (_, dw1, grads) = problem.loss_and_grad(&bank);

    let h = 1e-5;
    // relative error with a floor so exactly-zero gradients compare absolutely
    let rel = |fd: f64, g: f64| (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8);
    let mut w1_worst: f64 = 0.0;
    for r in 0..dw1.nrows() {
        for c in 0..dw1.ncols() {
            let mut b = bank.clone();
            b.w1_mut()[[r, c]] += h;
            let up = problem.loss(&b);
            b.w1_mut()[[r, c]] -= 2.0 * h;
            let fd = (up - problem.loss(&b)) / (2.0 * h);
            w1_worst = w1_worst.max(rel(fd, dw1[[r, c]]));
        }
    }
    fn weight(b: &mut DetectorBank, head: usize, pos: bool) -> &mut Array1<f64> {
        let hd = &mut b.heads_mut()[head];
        if pos {
            &mut hd.w_pos
        } else {
            &mut hd.w_neg
        }
    }
    let mut w2_worst: f64 = 0.0;
    for head in 0..bank.heads().len() {
        for pos in [true, false] {
            for idx in 0..bank.heads()[head].w_pos.len() {
                let mut b = bank.clone();
                weight(&mut b, head, pos)[idx] += h;
                let up = problem.loss(&b);
                weight(&mut b, head, pos)[idx] -= 2.0 * h;
                let fd = (up - problem.loss(&b)) / (2.0 * h);
                let g = if pos { grads[head].w_pos[idx] } else { grads[head].w_neg[idx] };
                w2_worst = w2_worst.max(rel(fd, g));
            }
        }
    }
    hard(w1_worst < 1e-4 && w2_worst < 1e-4, format!("worst relative error W1 {w1_worst:.2e}, W2 {w2_worst:.2e}"))
}

fn posterior_chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst: f64 = 0.0;
    let mut negative = false;
    for _ in 0..10_000 {
        let mut r = || 10f64.powf(rng.random_range(-12.0..12.0));
        let q = solve_posterior_chain(r(), r(), r());
        worst = worst.max((q.p.iter().sum::<f64>() - 1.0).abs());
        negative |= q.p.iter().any(|&p| p < 0.0);
    }
    let uniform = solve_posterior_chain(1.0, 1.0, 1.0).p == [0.25; 4];
    hard(worst < 1e-12 && uniform && !negative, format!("max |sum - 1| {worst:.2e}, uniform exact {uniform}"))
}

/// Wilson score interval at 95%.
fn wilson(errors: usize, total: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = total as f64;
    let p = errors as f64 / n;
    let centre = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
    let half = z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    (centre - half, centre + half)
}

fn record(records: &[SerRecord], snr: f64, kind: DetectorKind) -> &SerRecord {
    records.iter().find(|r| r.snr_db == snr && r.detector == kind).unwrap()
}

/// `a ≤ b` unless `a`'s interval lies wholly above `b`'s.
fn no_inversion(a: &SerRecord, b: &SerRecord) -> bool {
    a.ser <= b.ser || wilson(a.symbol_errors, a.symbols_total).0 <= wilson(b.symbol_errors, b.symbols_total).1
}

fn ordering_perfect_csi() -> Outcome {
    let t = Instant::now();
    let cfg = SimConfig { snr_grid_db: vec![10.0, 15.0], frames_per_point: 200, ..SimConfig::desk() };
    let out = sweep(&cfg).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let mut passed = secs < 15.0 * 60.0;
    let mut parts = Vec::new();
    for snr in [10.0, 15.0] {
        let [ml, rc, lm] = [DetectorKind::Ml, DetectorKind::Rc, DetectorKind::Lmmse].map(|k| record(&out.records, snr, k));
        let (lo, hi) = (no_inversion(ml, rc), no_inversion(rc, lm));
        passed &= lo && hi;
        let ci = |r: &SerRecord| {
            let (a, b) = wilson(r.symbol_errors, r.symbols_total);
            format!("{:.4} [{a:.4}, {b:.4}]", r.ser)
        };
        parts.push(format!(
            "{snr} dB: ML {} {} RC {} {} LMMSE {}",
            ci(ml),
            if lo { "<=" } else { ">" },
            ci(rc),
            if hi { "<=" } else { ">" },
            ci(lm)
        ));
    }
    parts.push(format!("{} invalid frames, {secs:.0} s", out.invalid.len()));
    hard(passed, parts.join("; "))
}

fn estimated_csi_low_snr() -> Outcome {
    let cfg = SimConfig {
        snr_grid_db: vec![0.0, 5.0],
        frames_per_point: 50,
        csi_mode: CsiSource::Estimated,
        detectors: vec![DetectorKind::Rc, DetectorKind::Ml],
        ..SimConfig::desk()
    };
    let out = sweep(&cfg).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for snr in [0.0, 5.0] {
        let rc = record(&out.records, snr, DetectorKind::Rc).ser;
        let ml = record(&out.records, snr, DetectorKind::Ml).ser;
        passed &= rc <= 2.0 * ml;
        parts.push(format!("{snr} dB: RC {rc:.4} vs 2 x ML {:.4}", 2.0 * ml));
    }
    hard(passed, parts.join("; "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig { nd: 2, frames_per_point: 2, snr_grid_db: vec![0.0, 10.0], ..SimConfig::desk() };
    let cfg_path = dir.path().join("cfg.toml");
    save_config(&cfg, &cfg_path).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_rcmimo"))
            .args(["sweep", "--seed", "42", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    hard(a == b && !a.is_empty(), format!("{} and {} bytes, identical {}", a.len(), b.len(), a == b))
}

fn echo_state() -> Outcome {
    let spec = ReservoirSpec { spectral_radius: 0.9, ..SimConfig::desk().reservoir_spec() };
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let w = init_reservoir(&spec, &mut rng).unwrap();
    let n = spec.n_neurons;
    let steps = 500;
    let u = Array2::from_shape_simple_fn((spec.in_dim, steps), || rng.random_range(-1.0..1.0));
    let a = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
    let b = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
    let sa = w.run_states_from(u.view(), &a).unwrap();
    let sb = w.run_states_from(u.view(), &b).unwrap();
    let end = (&sa.column(steps - 1) - &sb.column(steps - 1)).mapv(|v| v * v).sum().sqrt();
    let ratio = end / (&a - &b).mapv(|v| v * v).sum().sqrt();
    hard(ratio < 1e-3, format!("state distance ratio {ratio:.2e} after {steps} steps"))
}

fn neighbour_ablation() -> Outcome {
    let base = SimConfig {
        snr_grid_db: vec![10.0],
        frames_per_point: 200,
        csi_mode: CsiSource::Estimated,
        detectors: vec![DetectorKind::Rc],
        ..SimConfig::desk()
    };
    let ser = |radius| sweep(&SimConfig { neighbor_radius: radius, ..base.clone() }).unwrap().records[0].clone();
    let (r2, r0) = (ser(2), ser(0));
    Outcome {
        passed: r2.ser <= r0.ser,
        soft: true,
        detail: format!("radius 2 {:.4} vs radius 0 {:.4}", r2.ser, r0.ser),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("real model equivalence", model_equivalence),
        ("subcarrier diagonalization", diagonalization),
        ("noiseless exactness", noiseless_exactness),
        ("gradient check", gradient_check),
        ("posterior chain", posterior_chain),
        ("perfect CSI ordering ML <= RC <= LMMSE", ordering_perfect_csi),
        ("estimated CSI low SNR RC <= 2 x ML", estimated_csi_low_snr),
        ("sweep determinism", determinism),
        ("echo state property", echo_state),
        ("neighbour augmentation ablation", neighbour_ablation),
    ];
    let mut failed = Vec::new();
    let mut total = Duration::ZERO;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        total += t.elapsed();
        let tag = match (o.passed, o.soft) {
            (true, _) => "PASS",
            (false, true) => "FLAG",
            (false, false) => "FAIL",
        };
        println!("{tag} {:>2} {name}: {} ({:.1} s)", i + 1, o.detail, t.elapsed().as_secs_f64());
        if !o.passed && !o.soft {
            failed.push(i + 1);
        }
    }
    println!("acceptance finished in {:.0} s, failed: {failed:?}", total.as_secs_f64());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
