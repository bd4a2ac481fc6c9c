use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Female,
    Male,
}

/// Hearing-aid program. Ordinal codes follow the listing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HProg {
    Low,
    Medium,
    High,
    HighPlus,
}

/// Sound environment classification. Ordinal codes follow the listing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoundClass {
    Quiet,
    Speech,
    SpeechInNoise,
    Noise,
}

impl HProg {
    pub const ALL: [HProg; 4] = [HProg::Low, HProg::Medium, HProg::High, HProg::HighPlus];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            HProg::Low => "low",
            HProg::Medium => "medium",
            HProg::High => "high",
            HProg::HighPlus => "high+",
        }
    }
}

impl SoundClass {
    pub const ALL: [SoundClass; 4] = [
        SoundClass::Quiet,
        SoundClass::Speech,
        SoundClass::SpeechInNoise,
        SoundClass::Noise,
    ];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            SoundClass::Quiet => "quiet",
            SoundClass::Speech => "speech",
            SoundClass::SpeechInNoise => "speech_in_noise",
            SoundClass::Noise => "noise",
        }
    }
}

impl Sex {
    pub fn label(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }
}

fn normalize(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c })
        .collect()
}

impl FromStr for Sex {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize(s).as_str() {
            "female" | "f" => Ok(Sex::Female),
            "male" | "m" => Ok(Sex::Male),
            _ => Err(format!("unknown Sex `{s}`")),
        }
    }
}

impl FromStr for HProg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize(s).as_str() {
            "low" => Ok(HProg::Low),
            "medium" => Ok(HProg::Medium),
            "high" => Ok(HProg::High),
            "high+" | "high_plus" | "highplus" => Ok(HProg::HighPlus),
            _ => Err(format!("unknown hProg `{s}`")),
        }
    }
}

impl FromStr for SoundClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize(s).as_str() {
            "quiet" => Ok(SoundClass::Quiet),
            "speech" => Ok(SoundClass::Speech),
            "speech_in_noise" | "speechinnoise" => Ok(SoundClass::SpeechInNoise),
            "noise" => Ok(SoundClass::Noise),
            _ => Err(format!("unknown SoundClass `{s}`")),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for HProg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for SoundClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One per-minute device log row. Every field except the identifier and the
/// timestamp may be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteLog {
    pub participant_id: u32,
    pub age: Option<u32>,
    pub sex: Option<Sex>,
    pub h_prog: Option<HProg>,
    pub h_vol: Option<i32>,
    pub lat_rel: Option<f64>,
    pub lon_rel: Option<f64>,
    pub pta4: Option<f64>,
    pub sound_class: Option<SoundClass>,
    pub timestamp: DateTime<Utc>,
}
