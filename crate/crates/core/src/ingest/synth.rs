//! Synthetic minute-log generator.
//!
//! Each participant has a base daily usage level; day-to-day usage follows a
//! stationary AR(1) process around it, so recent usage is the strongest
//! predictor of future usage. A day's usage is cut into wear sessions that
//! are separated by gaps longer than the default 600 s interval threshold.
//! Every other field is drawn independently of usage.

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::csv_io::LogWriter;
use super::record::{HProg, MinuteLog, Sex, SoundClass};
use super::IngestError;
use crate::seed::mix_seed;

const MINUTES_PER_DAY: i64 = 1440;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_participants: u32,
    pub days: u32,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// Population mean of the per-participant base usage, hours per day.
    pub usage_mean_h: f64,
    /// Spread of base usage across participants, hours.
    pub usage_between_sd_h: f64,
    /// Stationary day-to-day spread around a participant's base, hours.
    pub usage_daily_sd_h: f64,
    /// Lag-1 coefficient of the daily usage process.
    pub autocorrelation: f64,
    pub max_usage_h: f64,
    /// Probability that a day has no wear at all.
    pub off_day_prob: f64,
    pub session_mean_min: f64,
    /// Shortest gap between sessions. Keep above `d_max` so sessions stay
    /// separate intervals.
    pub gap_min_min: u32,
    pub gap_mean_min: f64,
    /// Per-field, per-record probability of an empty cell.
    pub missing_prob: f64,
    pub age_range: (u32, u32),
    pub female_prob: f64,
    pub pta4_mean: f64,
    pub pta4_sd: f64,
    pub h_vol_range: (i32, i32),
    /// First session of the day starts uniformly within these hours.
    pub wake_hour_range: (u32, u32),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_participants: 53,
            days: 200,
            seed: 2022,
            start_date: NaiveDate::from_ymd_opt(2019, 1, 1).expect("valid date"),
            usage_mean_h: 8.0,
            usage_between_sd_h: 3.0,
            usage_daily_sd_h: 2.0,
            autocorrelation: 0.8,
            max_usage_h: 16.0,
            off_day_prob: 0.005,
            session_mean_min: 120.0,
            gap_min_min: 11,
            gap_mean_min: 40.0,
            missing_prob: 0.01,
            age_range: (55, 90),
            female_prob: 0.5,
            pta4_mean: 45.0,
            pta4_sd: 12.0,
            h_vol_range: (0, 10),
            wake_hour_range: (6, 9),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let err = |m: &str| Err(IngestError::Config(m.to_string()));
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.n_participants < 1 {
            return err("n_participants must be at least 1");
        }
        if self.days < 1 {
            return err("days must be at least 1");
        }
        if !prob(self.off_day_prob) || !prob(self.missing_prob) || !prob(self.female_prob) {
            return err("probabilities must lie in [0, 1]");
        }
        if !(self.autocorrelation > -1.0 && self.autocorrelation < 1.0) {
            return err("autocorrelation must lie in (-1, 1)");
        }
        if !(self.max_usage_h > 0.0 && self.max_usage_h <= 20.0) {
            return err("max_usage_h must lie in (0, 20]");
        }
        if !(self.usage_mean_h >= 0.0) || !(self.usage_between_sd_h >= 0.0) || !(self.usage_daily_sd_h >= 0.0) {
            return err("usage parameters must be non-negative");
        }
        if !(self.session_mean_min >= 1.0) {
            return err("session_mean_min must be at least 1");
        }
        if self.gap_min_min < 1 || !(self.gap_mean_min >= self.gap_min_min as f64) {
            return err("gap_mean_min must be at least gap_min_min, which must be positive");
        }
        if self.age_range.0 > self.age_range.1 || self.h_vol_range.0 > self.h_vol_range.1 {
            return err("ranges must be ordered");
        }
        if !(self.pta4_sd >= 0.0) || !self.pta4_mean.is_finite() {
            return err("pta4 parameters must be finite and non-negative spread");
        }
        if self.wake_hour_range.0 > self.wake_hour_range.1 || self.wake_hour_range.1 > 23 {
            return err("wake_hour_range must be ordered hours within a day");
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| IngestError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn participant_ids(&self) -> std::ops::RangeInclusive<u32> {
        1..=self.n_participants
    }
}

struct Profile {
    base_h: f64,
    age: u32,
    sex: Sex,
    pta4: f64,
    vol: i32,
    prog: HProg,
    lat: f64,
    lon: f64,
}

fn profile(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Profile {
    let base = Normal::new(cfg.usage_mean_h, cfg.usage_between_sd_h).expect("finite sd");
    let pta = Normal::new(cfg.pta4_mean, cfg.pta4_sd).expect("finite sd");
    let (lo, hi) = cfg.h_vol_range;
    Profile {
        base_h: base.sample(rng).clamp(0.0, cfg.max_usage_h),
        age: rng.gen_range(cfg.age_range.0..=cfg.age_range.1),
        sex: if rng.gen_bool(cfg.female_prob) { Sex::Female } else { Sex::Male },
        pta4: (pta.sample(rng) * 10.0).round() / 10.0,
        vol: rng.gen_range(lo..=hi),
        prog: HProg::ALL[rng.gen_range(0..HProg::ALL.len())],
        lat: rng.gen_range(-0.5..0.5),
        lon: rng.gen_range(-0.5..0.5),
    }
}

/// Daily wear minutes for one participant, following the AR(1) process.
fn daily_minutes(cfg: &SynthConfig, p: &Profile, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let rho = cfg.autocorrelation;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut z: f64 = std_normal.sample(rng);
    let mut out = Vec::with_capacity(cfg.days as usize);
    for day in 0..cfg.days {
        if day > 0 {
            z = rho * z + innovation * std_normal.sample(rng);
        }
        let off = rng.gen_bool(cfg.off_day_prob);
        let hours = (p.base_h + cfg.usage_daily_sd_h * z).clamp(0.0, cfg.max_usage_h);
        out.push(if off { 0 } else { (hours * 60.0).round() as i64 });
    }
    out
}

/// Splits `total` minutes into session lengths.
fn session_lengths(cfg: &SynthConfig, total: i64, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let exp = Exp::new(1.0 / cfg.session_mean_min).expect("positive rate");
    let mut left = total;
    let mut out = Vec::new();
    while left > 0 {
        let len = (exp.sample(rng).round() as i64).max(5).min(left);
        out.push(len);
        left -= len;
    }
    // fold a trailing stub into its predecessor
    if out.len() > 1 && *out.last().unwrap() < 5 {
        let stub = out.pop().unwrap();
        *out.last_mut().unwrap() += stub;
    }
    // the day must hold every session plus the minimum gaps between them
    let max_sessions = (1 + (MINUTES_PER_DAY - total) / cfg.gap_min_min as i64).max(1) as usize;
    while out.len() > max_sessions {
        let last = out.pop().unwrap();
        *out.last_mut().unwrap() += last;
    }
    out
}

/// Minute offsets within the day at which each session starts.
fn session_starts(cfg: &SynthConfig, lengths: &[i64], rng: &mut ChaCha8Rng) -> Vec<i64> {
    let total: i64 = lengths.iter().sum();
    let n = lengths.len() as i64;
    let gap_min = cfg.gap_min_min as i64;
    let slack = (MINUTES_PER_DAY - total - (n - 1) * gap_min).max(0);
    let wake = rng.gen_range(cfg.wake_hour_range.0 as i64 * 60..=cfg.wake_hour_range.1 as i64 * 60);
    let wake = wake.min(slack);

    let extra_dist = Exp::new(1.0 / (cfg.gap_mean_min - gap_min as f64).max(1.0)).expect("positive rate");
    let mut extras: Vec<f64> = (1..n).map(|_| extra_dist.sample(rng)).collect();
    let room = (slack - wake) as f64;
    let sum: f64 = extras.iter().sum();
    if sum > room {
        let f = room / sum;
        extras.iter_mut().for_each(|e| *e *= f);
    }

    let mut starts = Vec::with_capacity(lengths.len());
    let mut t = wake;
    for (i, len) in lengths.iter().enumerate() {
        starts.push(t);
        t += len;
        if i + 1 < lengths.len() {
            t += gap_min + extras[i].floor() as i64;
        }
    }
    starts
}

const SOUND_WEIGHTS: [f64; 4] = [0.3, 0.3, 0.25, 0.15];

fn pick_sound(rng: &mut ChaCha8Rng) -> SoundClass {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (class, w) in SoundClass::ALL.iter().zip(SOUND_WEIGHTS) {
        acc += w;
        if u < acc {
            return *class;
        }
    }
    SoundClass::Noise
}

/// All minute records of participant `pid`, in time order.
pub fn generate_participant(cfg: &SynthConfig, pid: u32) -> Vec<MinuteLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, pid as u64));
    let p = profile(cfg, &mut rng);
    let minutes = daily_minutes(cfg, &p, &mut rng);
    let origin: DateTime<Utc> = cfg.start_date.and_hms_opt(0, 0, 0).expect("midnight").and_utc();
    let miss = cfg.missing_prob;
    let (vol_lo, vol_hi) = cfg.h_vol_range;
    let jitter = Normal::new(0.0, 0.02).expect("finite sd");

    let mut out = Vec::with_capacity(minutes.iter().sum::<i64>() as usize);
    for (day, &total) in minutes.iter().enumerate() {
        if total == 0 {
            continue;
        }
        let lengths = session_lengths(cfg, total, &mut rng);
        let starts = session_starts(cfg, &lengths, &mut rng);
        let day_start = origin + Duration::days(day as i64);
        for (&start, &len) in starts.iter().zip(&lengths) {
            let prog = if rng.gen_bool(0.7) {
                p.prog
            } else {
                HProg::ALL[rng.gen_range(0..HProg::ALL.len())]
            };
            let vol = (p.vol + rng.gen_range(-1..=1)).clamp(vol_lo, vol_hi);
            let sound = pick_sound(&mut rng);
            let lat = ((p.lat + jitter.sample(&mut rng)) * 1e4).round() / 1e4;
            let lon = ((p.lon + jitter.sample(&mut rng)) * 1e4).round() / 1e4;
            for m in 0..len {
                let mut keep = || !rng.gen_bool(miss);
                out.push(MinuteLog {
                    participant_id: pid,
                    age: keep().then_some(p.age),
                    sex: keep().then_some(p.sex),
                    h_prog: keep().then_some(prog),
                    h_vol: keep().then_some(vol),
                    lat_rel: keep().then_some(lat),
                    lon_rel: keep().then_some(lon),
                    pta4: keep().then_some(p.pta4),
                    sound_class: keep().then_some(sound),
                    timestamp: day_start + Duration::minutes(start + m),
                });
            }
        }
    }
    out
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Vec<MinuteLog>, IngestError> {
    cfg.validate()?;
    Ok(cfg.participant_ids().flat_map(|pid| generate_participant(cfg, pid)).collect())
}

/// Streams the generated log as CSV, one participant at a time. Returns the
/// number of records written.
pub fn write_synthetic_csv<W: Write>(cfg: &SynthConfig, writer: W) -> Result<usize, IngestError> {
    cfg.validate()?;
    let mut w = LogWriter::new(writer)?;
    let mut n = 0;
    for pid in cfg.participant_ids() {
        for r in generate_participant(cfg, pid) {
            w.write(&r)?;
            n += 1;
        }
    }
    w.finish()?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::validate_schema;

    fn tiny() -> SynthConfig {
        SynthConfig {
            n_participants: 3,
            days: 10,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_synthetic_csv(&tiny(), &mut a).unwrap();
        write_synthetic_csv(&tiny(), &mut b).unwrap();
        assert_eq!(a, b);
        let mut c = Vec::new();
        write_synthetic_csv(&SynthConfig { seed: 1, ..tiny() }, &mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn one_thirty_minute_session() {
        let cfg = SynthConfig {
            n_participants: 1,
            days: 1,
            usage_mean_h: 0.5,
            usage_between_sd_h: 0.0,
            usage_daily_sd_h: 0.0,
            off_day_prob: 0.0,
            session_mean_min: 1e6,
            ..SynthConfig::default()
        };
        let rows = generate_synthetic(&cfg).unwrap();
        assert_eq!(rows.len(), 30);
        for w in rows.windows(2) {
            assert_eq!(w[1].timestamp - w[0].timestamp, Duration::minutes(1));
        }
    }

    #[test]
    fn output_validates_and_is_ordered() {
        let rows = generate_synthetic(&tiny()).unwrap();
        let report = validate_schema(&rows);
        assert_eq!(report.error_count(), 0);
        assert!(report.non_monotonic_participants.is_empty());
        assert_eq!(report.per_participant.len(), 3);
    }

    #[test]
    fn static_fields_constant_per_participant() {
        let rows = generate_participant(&tiny(), 2);
        let ages: std::collections::BTreeSet<_> = rows.iter().filter_map(|r| r.age).collect();
        let sexes: std::collections::BTreeSet<_> = rows.iter().filter_map(|r| r.sex).collect();
        let pta: std::collections::BTreeSet<_> = rows.iter().filter_map(|r| r.pta4.map(f64::to_bits)).collect();
        assert_eq!((ages.len(), sexes.len(), pta.len()), (1, 1, 1));
    }

    #[test]
    fn sessions_never_cross_midnight() {
        let cfg = SynthConfig {
            usage_mean_h: 15.0,
            usage_between_sd_h: 0.0,
            wake_hour_range: (9, 9),
            ..tiny()
        };
        for r in generate_participant(&cfg, 1).windows(2) {
            let gap = r[1].timestamp - r[0].timestamp;
            let same_day = r[1].timestamp.date_naive() == r[0].timestamp.date_naive();
            assert!(gap == Duration::minutes(1) && same_day || gap >= Duration::minutes(11));
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate_synthetic(&SynthConfig { days: 0, ..tiny() }).is_err());
        assert!(generate_synthetic(&SynthConfig { missing_prob: 1.5, ..tiny() }).is_err());
        assert!(generate_synthetic(&SynthConfig { n_participants: 0, ..tiny() }).is_err());
    }
}
