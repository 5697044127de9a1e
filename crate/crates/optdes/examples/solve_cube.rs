//! Closed-form D-optimal designs on the cube (K = 3) across the four
//! solved cases, plus a parameter point where no closed form is known and
//! the numeric solver takes over.
//!
//! ```bash
//! cargo run --example solve_cube
//! ```

use optdes::solvers::{solve, NumericOptions};
use optdes::{DispersionSpec, Tolerances};

fn main() -> optdes::Result<()> {
    let tols = Tolerances::default();
    let opts = NumericOptions::default();
    let cases = [
        (1.0, 2.0, 0.4, "both orbit levels interior, weight 1/4 on the diagonal"),
        (1.0, 1.3, 0.45, "one orbit pinned at the vertices (two valid answers)"),
        (1.0, 1.0, 0.2, "vertex design with the radical weight"),
        (1.0, 1.0, 0.9, "strong correlation: outside the solved regions"),
    ];
    for (d0, d1, d2, what) in cases {
        let spec = DispersionSpec::new(3, d0, d1, d2)?;
        let result = solve(&spec, &opts, &tols)?;
        println!("(d0, d1, d2) = ({d0}, {d1}, {d2})  [{what}]");
        println!(
            "  method {:?}, region {}, certified {}, log det {:.9}",
            result.method,
            result.region_label,
            result.is_certified(),
            result.log_det
        );
        if let Some(rd) = result.design.as_rhombic() {
            for o in rd.orbits() {
                println!("  orbit {}: level = {:.6}, weight = {:.6}", o.ell, o.level, o.weight);
            }
        }
        if let Some(alt) = &result.alternate {
            println!("  alternate ({}) also verifies:", alt.region_label);
            for o in alt.design.as_rhombic().unwrap().orbits() {
                println!("    orbit {}: level = {:.6}, weight = {:.6}", o.ell, o.level, o.weight);
            }
        }
        println!("  min psi over the box = {:.3e}\n", result.kw.min_psi);
    }
    Ok(())
}
