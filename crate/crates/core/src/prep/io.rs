//! Prepared-dataset directory.
//!
//! | file                 | content                                          |
//! |----------------------|--------------------------------------------------|
//! | `prep_config.json`   | the [`PrepConfig`] used                          |
//! | `daily.csv`          | imputed days in original units, split, outlier   |
//! | `scaler.json`        | [`ScalerParams`] of the input columns            |
//! | `vif.json`           | [`VifReport`]; infinite values as `"inf"`        |
//! | `windows.bin`        | samples, layout below                            |
//! | `split_manifest.csv` | per-participant day and window counts            |
//!
//! `windows.bin` is little-endian throughout:
//!
//! ```text
//! magic  b"AEDW"
//! u32    version (1)
//! u32    L, u32 H, u32 F
//! u64    sample count
//! per sample:
//!   u32  participant id
//!   i32  first input day, days since 1970-01-01
//!   u8   split (0 train, 1 val, 2 test), then 3 zero bytes
//!   f64  L*F scaled inputs, row-major (day by day)
//!   f64  H scaled targets
//!   f64  H targets in seconds
//! ```

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{
    DailyRow, ParticipantSummary, PrepConfig, PrepError, PreparedDataset, Sample, ScalerParams, Split, VifReport,
    FEATURE_NAMES,
};
use crate::nn::Matrix;

pub const WINDOWS_MAGIC: &[u8; 4] = b"AEDW";
pub const WINDOWS_VERSION: u32 = 1;

pub const PREP_CONFIG_FILE: &str = "prep_config.json";
pub const DAILY_FILE: &str = "daily.csv";
pub const SCALER_FILE: &str = "scaler.json";
pub const VIF_FILE: &str = "vif.json";
pub const WINDOWS_FILE: &str = "windows.bin";
pub const SPLIT_MANIFEST_FILE: &str = "split_manifest.csv";

fn io_err(path: &Path, e: impl std::fmt::Display) -> PrepError {
    PrepError::Io(format!("{}: {e}", path.display()))
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch")
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), PrepError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PrepError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PrepError::Format(format!("{}: {e}", path.display())))
}

/// Writes every dataset file into `dir` (created if needed) and returns
/// their paths.
pub fn write_dataset(ds: &PreparedDataset, dir: &Path) -> Result<Vec<PathBuf>, PrepError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let paths: Vec<PathBuf> = [
        PREP_CONFIG_FILE,
        DAILY_FILE,
        SCALER_FILE,
        VIF_FILE,
        WINDOWS_FILE,
        SPLIT_MANIFEST_FILE,
    ]
    .iter()
    .map(|f| dir.join(f))
    .collect();
    write_json(&paths[0], &ds.config)?;
    write_daily_csv(&ds.daily, &paths[1])?;
    write_json(&paths[2], &ds.scaler)?;
    write_json(&paths[3], &ds.vif)?;
    let file = std::fs::File::create(&paths[4]).map_err(|e| io_err(&paths[4], e))?;
    let mut w = BufWriter::new(file);
    write_windows(&mut w, &ds.samples, ds.window_len(), ds.horizon(), ds.n_features())
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&paths[4], e))?;
    write_split_manifest(&ds.participants, &paths[5])?;
    Ok(paths)
}

pub fn load_dataset(dir: &Path) -> Result<PreparedDataset, PrepError> {
    let config: PrepConfig = read_json(&dir.join(PREP_CONFIG_FILE))?;
    let scaler: ScalerParams = read_json(&dir.join(SCALER_FILE))?;
    let vif: VifReport = read_json(&dir.join(VIF_FILE))?;
    let daily = read_daily_csv(&dir.join(DAILY_FILE))?;
    let participants = read_split_manifest(&dir.join(SPLIT_MANIFEST_FILE))?;
    let path = dir.join(WINDOWS_FILE);
    let file = std::fs::File::open(&path).map_err(|e| io_err(&path, e))?;
    let (l, h, f, samples) = read_windows(&mut BufReader::new(file))?;
    if (l, h, f) != (config.window_len, config.horizon, scaler.n_features()) {
        return Err(PrepError::Format(format!(
            "windows.bin shape {l}x{f} -> {h} disagrees with config and scaler"
        )));
    }
    Ok(PreparedDataset {
        config,
        feature_names: scaler.feature_names.clone(),
        scaler,
        vif,
        samples,
        daily,
        participants,
    })
}

pub fn write_windows<W: Write>(w: &mut W, samples: &[Sample], l: usize, h: usize, f: usize) -> std::io::Result<()> {
    w.write_all(WINDOWS_MAGIC)?;
    w.write_all(&WINDOWS_VERSION.to_le_bytes())?;
    for v in [l, h, f] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&(samples.len() as u64).to_le_bytes())?;
    for s in samples {
        assert_eq!(s.input.shape(), (l, f), "sample shape");
        w.write_all(&s.participant_id.to_le_bytes())?;
        let days = (s.start_date - epoch()).num_days() as i32;
        w.write_all(&days.to_le_bytes())?;
        w.write_all(&[s.split.code(), 0, 0, 0])?;
        for v in s.input.as_slice().iter().chain(&s.target).chain(&s.target_s) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, PrepError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, PrepError> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn truncated(e: std::io::Error) -> PrepError {
    PrepError::Format(format!("windows.bin truncated: {e}"))
}

/// Returns `(L, H, F, samples)`.
pub fn read_windows<R: Read>(r: &mut R) -> Result<(usize, usize, usize, Vec<Sample>), PrepError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != WINDOWS_MAGIC {
        return Err(PrepError::Format("windows.bin: bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != WINDOWS_VERSION {
        return Err(PrepError::Format(format!("windows.bin: unsupported version {version}")));
    }
    let (l, h, f) = (read_u32(r)? as usize, read_u32(r)? as usize, read_u32(r)? as usize);
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    let count = u64::from_le_bytes(b) as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let participant_id = read_u32(r)?;
        let days = read_u32(r)? as i32;
        let mut tag = [0u8; 4];
        r.read_exact(&mut tag).map_err(truncated)?;
        let split = Split::from_code(tag[0]).ok_or_else(|| PrepError::Format(format!("bad split code {}", tag[0])))?;
        let input = Matrix::from_vec(l, f, read_f64s(r, l * f)?).map_err(|e| PrepError::Format(e.to_string()))?;
        samples.push(Sample {
            participant_id,
            start_date: epoch() + chrono::Duration::days(days as i64),
            split,
            input,
            target: read_f64s(r, h)?,
            target_s: read_f64s(r, h)?,
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(truncated)? != 0 {
        return Err(PrepError::Format("windows.bin: trailing bytes".into()));
    }
    Ok((l, h, f, samples))
}

pub fn write_daily_csv(rows: &[DailyRow], path: &Path) -> Result<(), PrepError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["participant_id", "date", "split", "outlier"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for r in rows {
        let mut rec = vec![
            r.participant_id.to_string(),
            r.date.to_string(),
            r.split.to_string(),
            r.outlier.to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_daily_csv(path: &Path) -> Result<Vec<DailyRow>, PrepError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let bad = |what: &str| PrepError::Format(format!("{} row {}: bad {what}", path.display(), i + 1));
        if rec.len() != 4 + FEATURE_NAMES.len() {
            return Err(bad("column count"));
        }
        out.push(DailyRow {
            participant_id: rec[0].parse().map_err(|_| bad("participant_id"))?,
            date: rec[1].parse().map_err(|_| bad("date"))?,
            split: rec[2].parse().map_err(|_| bad("split"))?,
            outlier: rec[3].parse().map_err(|_| bad("outlier"))?,
            values: rec
                .iter()
                .skip(4)
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("value"))?,
        });
    }
    Ok(out)
}

pub fn write_split_manifest(rows: &[ParticipantSummary], path: &Path) -> Result<(), PrepError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_split_manifest(path: &Path) -> Result<Vec<ParticipantSummary>, PrepError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PrepError::Format(format!("{}: {e}", path.display())))
}
