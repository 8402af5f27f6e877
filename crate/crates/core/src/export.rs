//! CSV traces and JSON summaries.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::channel::{format_rss, LinkBudgetParams};
use crate::engine::{BlockageRecord, LinkSample, Metrics, RunOutput, TraceEvent, WindowAirtime};
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// `time_s,bs_beam,ms_beam,rss_dbm,state`; RSS below the noise floor is
/// written as `NF` and slots without synchronization as state `UNSYNCED`.
pub fn write_trace_csv<W: Write>(
    w: W,
    samples: &[LinkSample],
    link: &LinkBudgetParams,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time_s", "bs_beam", "ms_beam", "rss_dbm", "state"])
        .map_err(csv_err)?;
    for s in samples {
        let state = if s.synced {
            s.state.as_str()
        } else {
            "UNSYNCED"
        };
        out.write_record([
            format!("{:.4}", s.time_s),
            s.bs_beam.to_string(),
            s.ms_beam.to_string(),
            format_rss(s.rss_dbm, link),
            state.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `time_s,entity,state_from,state_to,detail`
pub fn write_events_csv<W: Write>(w: W, events: &[TraceEvent]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["time_s", "entity", "state_from", "state_to", "detail"])
        .map_err(csv_err)?;
    for e in events {
        out.write_record([
            format!("{:.4}", e.time_s),
            e.entity.clone(),
            e.state_from.clone(),
            e.state_to.clone(),
            e.detail.clone(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Rows are BS beams, columns MS beams.
pub fn write_rss_matrix_csv<W: Write>(w: W, matrix: &[Vec<f64>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let cols = matrix.first().map_or(0, Vec::len);
    let mut header = vec!["bs_beam".to_string()];
    header.extend((0..cols).map(|m| format!("ms_{m}")));
    out.write_record(&header).map_err(csv_err)?;
    for (bs, row) in matrix.iter().enumerate() {
        let mut rec = vec![bs.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:.3}")));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a> {
    pub scenario: Option<&'a str>,
    pub seed: u64,
    pub unblock: bool,
    pub sync_preserved: bool,
    pub metrics: &'a Metrics,
    pub blockages: &'a [BlockageRecord],
    pub discovery_windows: &'a [WindowAirtime],
}

impl<'a> RunSummary<'a> {
    pub fn new(scenario: Option<&'a str>, seed: u64, unblock: bool, out: &'a RunOutput) -> Self {
        RunSummary {
            scenario,
            seed,
            unblock,
            sync_preserved: out.metrics.outage_count == 0,
            metrics: &out.metrics,
            blockages: &out.blockages,
            discovery_windows: &out.windows,
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(w: W, value: &T) -> Result<()> {
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Parse(e.to_string()))?;
    writeln!(w)?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(path)?)))
}

/// Write `trace.csv`, `events.csv` and `summary.json` into `dir`.
pub fn write_run(
    dir: &Path,
    summary: &RunSummary<'_>,
    out: &RunOutput,
    link: &LinkBudgetParams,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let (p1, f) = create(dir, "trace.csv")?;
    write_trace_csv(f, &out.trace, link)?;
    let (p2, f) = create(dir, "events.csv")?;
    write_events_csv(f, &out.events)?;
    let (p3, f) = create(dir, "summary.json")?;
    write_json(f, summary)?;
    Ok(vec![p1, p2, p3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolState;

    #[test]
    fn trace_rows_mark_noise_floor() {
        let link = LinkBudgetParams::default();
        let rows = [
            LinkSample {
                time_s: 0.0,
                bs_beam: 12,
                ms_beam: 12,
                rss_dbm: -58.0,
                state: ProtocolState::No,
                synced: true,
            },
            LinkSample {
                time_s: 0.0001,
                bs_beam: 12,
                ms_beam: 12,
                rss_dbm: -90.0,
                state: ProtocolState::No,
                synced: false,
            },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows, &link).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "time_s,bs_beam,ms_beam,rss_dbm,state");
        assert_eq!(lines[1], "0.0000,12,12,-58.000,NO");
        assert_eq!(lines[2], "0.0001,12,12,NF,UNSYNCED");
    }

    #[test]
    fn event_detail_is_quoted_when_needed() {
        let ev = TraceEvent {
            time_s: 0.25,
            entity: "ms".into(),
            state_from: "NO".into(),
            state_to: "BA".into(),
            detail: "pair (1, 2)".into(),
        };
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &[ev]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.ends_with("0.2500,ms,NO,BA,\"pair (1, 2)\"\n"),
            "{text}"
        );
    }
}
