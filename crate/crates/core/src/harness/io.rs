use std::io::Write;
use std::path::Path;

use super::{FrameTrace, SerRecord};
use crate::realmap::{Coord, Part};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] =
    ["snr_db", "detector", "csi_mode", "symbol_errors", "symbols_total", "ser", "frames", "seed"];

fn comment_line() -> String {
    format!(
        "# snr_db = 10*log10(Nt*Es/noise_var) per receive antenna, Es = 10; rcmimo {}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Writes one row per record under a comment line and the fixed header.
pub fn write_results(records: &[SerRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_results_to(records, file)
}

pub fn write_results_to(records: &[SerRecord], mut out: impl Write) -> Result<()> {
    out.write_all(comment_line().as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.snr_db.to_string(),
            r.detector.to_string(),
            r.csi_mode.to_string(),
            r.symbol_errors.to_string(),
            r.symbols_total.to_string(),
            format!("{:.9e}", r.ser),
            r.frames.to_string(),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-coordinate RC posteriors of a traced frame, one row per data symbol and coordinate.
pub fn write_frame_dump(trace: &FrameTrace, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["symbol", "ntx", "nsc", "part", "sent", "detected", "p_m3", "p_m1", "p_p1", "p_p3"])
        .map_err(csv_err)?;
    let Some(dets) = &trace.rc else {
        w.flush()?;
        return Ok(());
    };
    let nt = trace.frame.pilots[0].nrows();
    let nc = trace.frame.nc;
    for (k, (det, x)) in dets.iter().zip(&trace.frame.data).enumerate() {
        for (idx, q) in det.posteriors.iter().enumerate() {
            let c = Coord::from_index(idx, nt, nc);
            let part = match c.part {
                Part::Re => "re",
                Part::Im => "im",
            };
            let mut row = vec![
                k.to_string(),
                c.ntx.to_string(),
                c.nsc.to_string(),
                part.to_string(),
                c.part.of(x[[c.ntx, c.nsc]]).to_string(),
                q.argmax().to_string(),
            ];
            row.extend(q.p.iter().map(|p| format!("{p:.6e}")));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
