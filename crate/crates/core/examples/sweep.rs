//! Runs the default sweep on the synthetic benchmark and prints the aggregate table.

use sidr::sim::{generate_synthetic_benchmark, run_simulation, BenchmarkConfig, SimConfig};
use sidr::{adjusted_silhouette, project, MdsConfig};

fn main() -> sidr::Result<()> {
    let bench = generate_synthetic_benchmark(&BenchmarkConfig::default())?;
    let base = project(&bench.features, None, &MdsConfig::default())?;
    println!(
        "baseline: primary {:.3}  secondary {:.3}",
        adjusted_silhouette(&base, &bench.primary)?.adjusted,
        adjusted_silhouette(&base, &bench.secondary)?.adjusted
    );
    let start = std::time::Instant::now();
    let report = run_simulation(&bench.features, &bench.secondary, &SimConfig::default())?;
    print!("{}", report.aggregates_csv());
    for row in report.failures() {
        println!("failed: {row:?}");
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
