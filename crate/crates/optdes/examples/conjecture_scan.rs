//! Scanning the parameter cone for points with no optimal rhombic design:
//! empty for even K, a wedge above `d2 = d1/2` for odd K.
//!
//! ```bash
//! cargo run --release --example conjecture_scan
//! ```

use optdes::regions::{conjecture_scan, ScanConfig};
use optdes::Tolerances;

fn main() {
    let tols = Tolerances::default();
    for k in [3usize, 4, 5] {
        let summary = conjecture_scan(&ScanConfig::new(k, 25), &tols);
        println!(
            "K={k}: {} in-cone cells, {} without an optimal rhombic design ({:.1}%), all above d2 = d1/2: {}",
            summary.cells_in_cone,
            summary.failures.len(),
            100.0 * summary.failure_fraction,
            summary.failures_confined_above_half_line,
        );
        if let Some((d1, d2)) = summary.failures.first() {
            println!("  first failing cell: d1 = {d1:.3}, d2 = {d2:.3}");
        }
    }
}
