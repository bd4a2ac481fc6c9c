//! CSV interchange for minute logs. Header names are fixed; column order is
//! free. Empty cells are absent values.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};

use super::record::MinuteLog;
use super::IngestError;

pub const COLUMNS: [&str; 10] = [
    "ID",
    "Age",
    "Sex",
    "hProg",
    "hVol",
    "LatRel",
    "LonRel",
    "PTA4",
    "SoundClass",
    "Timestamp",
];

pub fn parse_log_csv(path: &Path) -> Result<Vec<MinuteLog>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
    read_log_csv(std::io::BufReader::new(file))
}

pub fn read_log_csv<R: Read>(reader: R) -> Result<Vec<MinuteLog>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::Io(e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::Schema("missing header row".into()));
    }
    let mut index = [usize::MAX; 10];
    for (pos, name) in headers.iter().enumerate() {
        let name = name.trim().trim_start_matches('\u{feff}');
        match COLUMNS.iter().position(|c| *c == name) {
            Some(k) if index[k] == usize::MAX => index[k] = pos,
            Some(_) => return Err(IngestError::Schema(format!("duplicate column `{name}`"))),
            None => return Err(IngestError::Schema(format!("unknown column `{name}`"))),
        }
    }
    if let Some(k) = index.iter().position(|&i| i == usize::MAX) {
        return Err(IngestError::Schema(format!("missing column `{}`", COLUMNS[k])));
    }

    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => {}
            Ok(false) => break,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(IngestError::Row { line, message: e.to_string() });
            }
        }
        let line = record.position().map_or(0, |p| p.line());
        let cell = |k: usize| record.get(index[k]).unwrap_or("").trim();
        let row_err = |message: String| IngestError::Row { line, message };

        let participant_id = parse_required::<u32>(cell(0), "ID").map_err(row_err)?;
        let timestamp = parse_timestamp(cell(9)).map_err(row_err)?;
        out.push(MinuteLog {
            participant_id,
            age: parse_optional(cell(1), "Age").map_err(row_err)?,
            sex: parse_optional(cell(2), "Sex").map_err(row_err)?,
            h_prog: parse_optional(cell(3), "hProg").map_err(row_err)?,
            h_vol: parse_optional(cell(4), "hVol").map_err(row_err)?,
            lat_rel: parse_optional(cell(5), "LatRel").map_err(row_err)?,
            lon_rel: parse_optional(cell(6), "LonRel").map_err(row_err)?,
            pta4: parse_optional(cell(7), "PTA4").map_err(row_err)?,
            sound_class: parse_optional(cell(8), "SoundClass").map_err(row_err)?,
            timestamp,
        });
    }
    Ok(out)
}

fn parse_required<T: FromStr>(s: &str, column: &str) -> Result<T, String> {
    if s.is_empty() {
        return Err(format!("{column} is required"));
    }
    s.parse::<T>().map_err(|_| format!("cannot parse {column} value `{s}`"))
}

fn parse_optional<T: FromStr>(s: &str, column: &str) -> Result<Option<T>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| format!("cannot parse {column} value `{s}`"))
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    if s.is_empty() {
        return Err("Timestamp is required".into());
    }
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| format!("invalid Timestamp `{s}`: {e}"))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Streaming writer; keeps memory flat when emitting large synthetic logs.
pub struct LogWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> LogWriter<W> {
    pub fn new(writer: W) -> Result<Self, IngestError> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(COLUMNS).map_err(|e| IngestError::Io(e.to_string()))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &MinuteLog) -> Result<(), IngestError> {
        self.inner
            .write_record([
                r.participant_id.to_string(),
                opt(&r.age),
                opt(&r.sex),
                opt(&r.h_prog),
                opt(&r.h_vol),
                opt(&r.lat_rel),
                opt(&r.lon_rel),
                opt(&r.pta4),
                opt(&r.sound_class),
                format_timestamp(&r.timestamp),
            ])
            .map_err(|e| IngestError::Io(e.to_string()))
    }

    pub fn finish(mut self) -> Result<(), IngestError> {
        self.inner.flush().map_err(|e| IngestError::Io(e.to_string()))
    }
}

pub fn write_log_csv<W: Write>(records: &[MinuteLog], writer: W) -> Result<(), IngestError> {
    let mut w = LogWriter::new(writer)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn write_log_csv_file(records: &[MinuteLog], path: &Path) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
    write_log_csv(records, std::io::BufWriter::new(file))
}
