//! The uncorrelated case `d2 = 0`: the optimal design is a uniform full
//! factorial on a common level, which shrinks into the interior as the
//! intercept variance grows.
//!
//! ```bash
//! cargo run --example diagonal_factorial
//! ```

use optdes::solvers::{solve, NumericOptions};
use optdes::{DispersionSpec, Tolerances};

fn main() -> optdes::Result<()> {
    let tols = Tolerances::default();
    let opts = NumericOptions::default();
    for (k, d0, d1) in [(2usize, 0.5, 2.0), (2, 4.0, 1.0), (3, 1.0, 2.0), (4, 1.0, 1.0)] {
        let spec = DispersionSpec::new(k, d0, d1, 0.0)?;
        let result = solve(&spec, &opts, &tols)?;
        let rd = result.design.as_rhombic().unwrap();
        let level = rd.orbits()[0].level;
        println!(
            "K={k}, d0={d0}, d1={d1}: {} | level = {:.6} | certified {}",
            result.region_label,
            level,
            result.is_certified()
        );
        for o in rd.orbits() {
            println!(
                "  orbit {}: weight = {:.6} (factorial share {:.6})",
                o.ell,
                o.weight,
                optdes::design::orbit_size(k, o.ell)? as f64 / (1u64 << k) as f64
            );
        }
    }
    Ok(())
}
