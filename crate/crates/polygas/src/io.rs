//! Snapshot CSV, diagnostics JSON-lines, and summary JSON writers. Numbers
//! are printed in the shortest round-trip decimal form so re-ingested
//! snapshots reproduce the field bit-exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scheme::{GridField, RunSink, RunSummary, StepRecord};
use crate::thermo::{riemann_invariants, GasConstants};

pub const SNAPSHOT_HEADER: &str = "x,rho,m,u,S,w,z";

pub fn write_snapshot<W: Write>(out: &mut W, field: &GridField, k: &GasConstants) -> Result<()> {
    writeln!(out, "{SNAPSHOT_HEADER}")?;
    for i in 0..field.n_cells() {
        let st = field.primitive(i);
        let (w, z) = riemann_invariants(&st, k);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            field.cell_center(i),
            st.rho,
            field.mom[i],
            st.u,
            st.s,
            w,
            z
        )?;
    }
    Ok(())
}

pub fn snapshot_to_path(path: &Path, field: &GridField, k: &GasConstants) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_snapshot(&mut out, field, k)?;
    out.flush()?;
    Ok(())
}

/// Columns of a re-ingested snapshot.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidState("empty snapshot file".into()))??;
    if header.trim() != SNAPSHOT_HEADER {
        return Err(Error::InvalidState(format!(
            "unexpected snapshot header '{header}'"
        )));
    }
    let mut snap = Snapshot::default();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidState(format!(
                "row {} has {} columns",
                n + 2,
                fields.len()
            )));
        }
        let mut vals = [0.0; 7];
        for (slot, text) in vals.iter_mut().zip(&fields) {
            *slot = text
                .parse()
                .map_err(|e| Error::InvalidState(format!("row {}: {e}", n + 2)))?;
        }
        snap.x.push(vals[0]);
        snap.rho.push(vals[1]);
        snap.m.push(vals[2]);
        snap.u.push(vals[3]);
        snap.s.push(vals[4]);
        snap.w.push(vals[5]);
        snap.z.push(vals[6]);
    }
    Ok(snap)
}

pub fn write_records_jsonl(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::InvalidState(format!("serialize record: {e}")))?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::InvalidState(format!("serialize summary: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Sink that writes numbered snapshot CSVs and a diagnostics JSON-lines
/// stream into a directory, flushing as it goes so partial output survives
/// a failed run.
pub struct DirectorySink {
    dir: PathBuf,
    snapshots: usize,
    records: BufWriter<File>,
}

impl DirectorySink {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let records = BufWriter::new(File::create(dir.join("diagnostics.jsonl"))?);
        Ok(DirectorySink {
            dir: dir.to_path_buf(),
            snapshots: 0,
            records,
        })
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots
    }
}

impl RunSink for DirectorySink {
    fn snapshot(&mut self, field: &GridField, k: &GasConstants) -> Result<()> {
        let path = self.dir.join(format!("snapshot_{:04}.csv", self.snapshots));
        snapshot_to_path(&path, field, k)?;
        self.snapshots += 1;
        Ok(())
    }

    fn record(&mut self, record: &StepRecord) -> Result<()> {
        serde_json::to_writer(&mut self.records, record)
            .map_err(|e| Error::InvalidState(format!("serialize record: {e}")))?;
        writeln!(self.records)?;
        self.records.flush()?;
        Ok(())
    }
}
