//! Writes the bundled six-region half-hourly trace.
//!
//! Usage: `cargo run -p carbonq --example gen_synthetic_trace [OUT] [DAYS] [SEED]`

use std::fs::File;
use std::io::BufWriter;

use carbonq::workload::{synthetic, write_carbon_csv};

fn main() {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .unwrap_or_else(|| "configs/synthetic-regional.csv".into());
    let days: u32 = args.next().map_or(90, |s| s.parse().expect("DAYS must be an integer"));
    let seed: u64 = args.next().map_or(2023, |s| s.parse().expect("SEED must be an integer"));
    let trace = synthetic::regional_trace(days, seed);
    let file = File::create(&out).unwrap_or_else(|e| panic!("cannot create {out}: {e}"));
    write_carbon_csv(&trace, BufWriter::new(file)).expect("write trace");
    eprintln!("wrote {} slots to {out}", trace.len());
}
