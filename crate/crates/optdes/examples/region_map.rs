//! Classifying the `(d1, d2)` plane at `d0 = 1` by the boundary
//! polynomial, with solver confirmation, and writing the map as CSV.
//!
//! ```bash
//! cargo run --release --example region_map > map_k3.csv
//! ```

use optdes::regions::{region_map, write_region_csv, MapConfig, RegionClass};
use optdes::Tolerances;

fn main() -> optdes::Result<()> {
    let cfg = MapConfig::new(3, 30, true);
    let rows = region_map(&cfg, &Tolerances::default());

    let mut counts = std::collections::BTreeMap::new();
    for row in &rows {
        let key = match (&row.predicted, row.confirmation.as_ref().map(|c| c.status)) {
            (RegionClass::Excluded, _) => "outside the cone",
            (_, Some(s)) => s.as_str(),
            (_, None) => "unconfirmed",
        };
        *counts.entry(key).or_insert(0usize) += 1;
    }
    for (key, n) in &counts {
        eprintln!("{key:>18}: {n} cells");
    }

    write_region_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
