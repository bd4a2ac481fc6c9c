//! Turn raw minute timestamps into usage intervals and daily usage totals.

use attn_ed::prep::{daily_usage, segment_intervals, MidnightPolicy, DEFAULT_D_MAX_S};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // Four log entries: the 700 s gap exceeds the 600 s threshold.
    let stamps = [0, 300, 900, 1600];
    let intervals = segment_intervals(1, &stamps, DEFAULT_D_MAX_S)?;
    for iv in &intervals {
        println!("interval {}..{} lasts {} s", iv.t_start, iv.t_end, iv.duration_s);
    }
    let days = daily_usage(&intervals, MidnightPolicy::Split);
    for (date, secs) in &days {
        println!("{date}: {secs} s");
    }

    // A session across midnight is split between the two days.
    let late: Vec<i64> = (0..=120).map(|m| 86_400 - 3_600 + m * 60).collect();
    let split = daily_usage(&segment_intervals(1, &late, DEFAULT_D_MAX_S)?, MidnightPolicy::Split);
    let start = daily_usage(&segment_intervals(1, &late, DEFAULT_D_MAX_S)?, MidnightPolicy::StartDay);
    println!("split at midnight: {split:?}");
    println!("credited to start day: {start:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
