//! Per-prime record files: JSON Lines, one object per prime in increasing
//! order, after a header line.
//!
//! ```text
//! {"format":"ordinary-records","format_version":1,"surface":"genus2:[1,0,0,0,0,1]"}
//! {"p":3,"status":"GOOD","a1":0,"a2":3,"a2_mod_p":0,"hw_trace":0,"hw_det":0,"ordinary":false,"shift":[0]}
//! ```
//!
//! Every field is always present; unknown values are `null`. `status` is
//! one of `GOOD`, `BAD_DISC`, `BAD_MODEL`, `EXCLUDED`. `shift` lists the
//! x-translations used by the Cartier-Manin recurrence (one per curve).

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::Path;

use ordinary_core::frobenius::FrobeniusRecord;
use ordinary_core::surfaces::ReductionStatus;
use serde::{Deserialize, Serialize};

pub const RECORDS_FORMAT: &str = "ordinary-records";
pub const RECORDS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsHeader {
    pub format: String,
    pub format_version: u32,
    pub surface: String,
}

impl RecordsHeader {
    pub fn new(surface: &str) -> Self {
        RecordsHeader { format: RECORDS_FORMAT.into(), format_version: RECORDS_FORMAT_VERSION, surface: surface.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordLine {
    pub p: u64,
    pub status: String,
    pub a1: Option<i64>,
    pub a2: Option<i64>,
    pub a2_mod_p: Option<u64>,
    pub hw_trace: Option<u64>,
    pub hw_det: Option<u64>,
    pub ordinary: Option<bool>,
    pub shift: Vec<u64>,
}

impl From<&FrobeniusRecord> for RecordLine {
    fn from(r: &FrobeniusRecord) -> Self {
        RecordLine {
            p: r.p,
            status: r.status.as_str().into(),
            a1: r.a1,
            a2: r.a2,
            a2_mod_p: r.a2_mod_p,
            hw_trace: r.hw_trace,
            hw_det: r.hw_det,
            ordinary: r.ordinary,
            shift: r.shift.clone(),
        }
    }
}

impl RecordLine {
    pub fn status(&self) -> Option<ReductionStatus> {
        self.status.parse().ok()
    }
}

/// Destination for records, fed in increasing order of `p`.
pub trait RecordSink {
    fn write(&mut self, record: &FrobeniusRecord) -> io::Result<()>;

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

/// Discards records.
pub struct NullSink;

impl RecordSink for NullSink {
    fn write(&mut self, _: &FrobeniusRecord) -> io::Result<()> {
        Ok(())
    }
}

impl RecordSink for Vec<FrobeniusRecord> {
    fn write(&mut self, record: &FrobeniusRecord) -> io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

pub struct JsonLinesSink<W: Write> {
    out: W,
}

impl<W: Write> JsonLinesSink<W> {
    /// Starts a new file with its header.
    pub fn new(mut out: W, surface: &str) -> io::Result<Self> {
        serde_json::to_writer(&mut out, &RecordsHeader::new(surface))?;
        out.write_all(b"\n")?;
        Ok(JsonLinesSink { out })
    }

    /// Continues a file whose header is already written.
    pub fn append(out: W) -> Self {
        JsonLinesSink { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for JsonLinesSink<W> {
    fn write(&mut self, record: &FrobeniusRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, &RecordLine::from(record))?;
        self.out.write_all(b"\n")
    }

    fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

fn invalid(detail: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, detail)
}

/// Reads a whole records file, checking the header.
pub fn read_records(path: &Path) -> io::Result<(RecordsHeader, Vec<RecordLine>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header: RecordsHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?).map_err(|e| invalid(format!("records header: {e}")))?,
        None => return Err(invalid("records file is empty".into())),
    };
    if header.format != RECORDS_FORMAT || header.format_version != RECORDS_FORMAT_VERSION {
        return Err(invalid(format!("unsupported records format {} v{}", header.format, header.format_version)));
    }
    let records = lines
        .enumerate()
        .map(|(i, line)| serde_json::from_str(&line?).map_err(|e| invalid(format!("records line {}: {e}", i + 2))))
        .collect::<io::Result<Vec<RecordLine>>>()?;
    Ok((header, records))
}

/// Opens an existing records file for appending after dropping every
/// record with `p > last_p` (work done after the last checkpoint).
pub fn reopen_records(path: &Path, surface: &str, last_p: u64) -> io::Result<JsonLinesSink<BufWriter<File>>> {
    let mut file = OpenOptions::new().read(true).write(true).open(path)?;
    let mut reader = BufReader::new(&mut file);
    let mut keep = 0u64;
    let mut line = String::new();
    let mut first = true;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 || !line.ends_with('\n') {
            break;
        }
        if first {
            let header: RecordsHeader =
                serde_json::from_str(&line).map_err(|e| invalid(format!("records header: {e}")))?;
            if header != RecordsHeader::new(surface) {
                return Err(invalid(format!("records file belongs to {}", header.surface)));
            }
            first = false;
        } else {
            let rec: RecordLine = serde_json::from_str(&line).map_err(|e| invalid(format!("records: {e}")))?;
            if rec.p > last_p {
                break;
            }
        }
        keep += n as u64;
    }
    if first {
        return Err(invalid("records file has no header".into()));
    }
    drop(reader);
    file.set_len(keep)?;
    file.seek(SeekFrom::End(0))?;
    Ok(JsonLinesSink::append(BufWriter::new(file)))
}
