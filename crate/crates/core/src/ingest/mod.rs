//! Minute-level log records: CSV parsing, schema validation, and a seeded
//! synthetic generator.

mod csv_io;
mod record;
mod synth;
mod validate;

pub use csv_io::{
    format_timestamp, parse_log_csv, parse_timestamp, read_log_csv, write_log_csv, write_log_csv_file, LogWriter,
    COLUMNS,
};
pub use record::{HProg, MinuteLog, Sex, SoundClass};
pub use synth::{generate_participant, generate_synthetic, write_synthetic_csv, SynthConfig};
pub use validate::{validate_schema, validate_schema_with, ValidationRanges, ValidationReport, OPTIONAL_FIELDS};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}
