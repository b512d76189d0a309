//! Runs the cross-validated comparison on the xor-rotate suite and prints
//! mean F1 per arm and classifier.
//!
//!     cargo run --release -p embadapt --example xor_suite [seed]

use embadapt::eval::{run_comparison, CompareConfig, Metric};
use embadapt::{generate_synthetic, SynthSpec, TrainConfig};

fn main() -> embadapt::Result<()> {
    let seed = std::env::args().nth(1).map_or(7, |s| s.parse().expect("seed must be an integer"));
    let ds = generate_synthetic(&SynthSpec::xor_suite(2000, vec![128, 128], seed))?;
    let config = CompareConfig {
        train: TrainConfig {
            projection_size: 32,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        },
        seed,
        ..CompareConfig::default()
    };
    let report = run_comparison(&ds, &config)?;
    println!("{:<20} {:<20} {:>8} {:>8}", "arm", "classifier", "f1", "std");
    for cell in &report.cells {
        match cell.summary(Metric::F1) {
            Some(s) => println!("{:<20} {:<20} {:>8.3} {:>8.3}", cell.arm, cell.classifier, s.mean, s.std),
            None => println!("{:<20} {:<20} {:>8} {:>8}", cell.arm, cell.classifier, "failed", "-"),
        }
    }
    Ok(())
}
