use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const MIN_SPLIT_DAYS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

/// Day counts `(train, val, test)` for a participant with `n_days` days, or
/// `None` when the participant is too short to split.
///
/// Test takes 20% of all days and validation 20% of the remainder, each
/// rounded to the nearest day. Neither product can land on a half, so the
/// rounding is unambiguous, and every split stays within one day of its
/// nominal share.
pub fn split_counts(n_days: usize) -> Option<(usize, usize, usize)> {
    if n_days < MIN_SPLIT_DAYS {
        return None;
    }
    let test = (0.2 * n_days as f64).round() as usize;
    let val = (0.2 * (n_days - test) as f64).round() as usize;
    Some((n_days - test - val, val, test))
}

/// Chronological labels for one participant's `n_days` ordered days.
pub fn split_per_participant(n_days: usize) -> Option<Vec<Split>> {
    let (train, val, test) = split_counts(n_days)?;
    let mut labels = vec![Split::Train; train];
    labels.extend(std::iter::repeat(Split::Val).take(val));
    labels.extend(std::iter::repeat(Split::Test).take(test));
    Some(labels)
}
