//! Generate a small synthetic minute-log cohort, write it as CSV, read it
//! back and run schema validation.

use attn_ed::ingest::{generate_synthetic, read_log_csv, validate_schema, write_log_csv, SynthConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        n_participants: 3,
        days: 10,
        ..SynthConfig::default()
    };
    let records = generate_synthetic(&cfg)?;
    let mut csv = Vec::new();
    write_log_csv(&records, &mut csv)?;
    let back = read_log_csv(csv.as_slice())?;
    assert_eq!(back.len(), records.len());

    let report = validate_schema(&back);
    println!("{} minute records from {} participants", report.n_records, report.per_participant.len());
    println!("null counts: {:?}", report.null_counts);
    println!("out of range: {:?}, duplicate pairs: {}", report.out_of_range, report.duplicate_pairs);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
