//! Closed-form D-optimal designs on the square (K = 2), one spec per
//! parameter region: both levels interior, one level pinned at the
//! boundary, and the pure vertex design.
//!
//! ```bash
//! cargo run --example solve_square
//! ```

use optdes::solvers::closed_form_k2;
use optdes::{DispersionSpec, Tolerances};

fn main() -> optdes::Result<()> {
    let tols = Tolerances::default();
    let cases = [
        (1.0, 2.0, 0.5, "small intercept variance: rhombus strictly inside"),
        (0.8, 1.0, 0.3, "mid range: anti-diagonal pinned at the vertices"),
        (0.8, 1.0, -0.3, "negative correlation: main diagonal pinned"),
        (2.0, 1.0, 0.5, "large intercept variance: full vertex design"),
    ];
    for (d0, d1, d2, what) in cases {
        let spec = DispersionSpec::new(2, d0, d1, d2)?;
        let result = closed_form_k2(&spec, &tols)?;
        println!("(d0, d1, d2) = ({d0}, {d1}, {d2})  [{what}]");
        println!(
            "  {} | certified: {} | log det = {:.9}",
            result.region_label,
            result.is_certified(),
            result.log_det
        );
        for o in result.design.as_rhombic().unwrap().orbits() {
            println!(
                "  orbit {}: level = {:.6}, weight = {:.6}",
                o.ell, o.level, o.weight
            );
        }
        println!("  min psi over the box = {:.3e}\n", result.kw.min_psi);
    }
    Ok(())
}
