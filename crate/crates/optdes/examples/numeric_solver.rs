//! The numeric rhombic solver in dimensions without closed forms, with
//! the optimality certificates that characterize the two design shapes:
//! interior designs make the whole sensitivity matrix vanish, vertex
//! designs make it diagonal with `g1 = -g0/K`.
//!
//! ```bash
//! cargo run --example numeric_solver
//! ```

use optdes::information::{gamma_blocks, info_blocks_rhombic};
use optdes::solvers::{numeric_rhombic, NumericOptions};
use optdes::{DispersionSpec, Tolerances};

fn main() -> optdes::Result<()> {
    let tols = Tolerances::default();
    let opts = NumericOptions::default();
    for (k, d0, d1, d2) in [
        (4usize, 1.0, 1.0, 0.8),
        (4, 0.3, 1.5, -0.4),
        (5, 1.0, 1.2, 0.5),
        (6, 1.0, 1.0, 0.6),
    ] {
        let spec = DispersionSpec::new(k, d0, d1, d2)?;
        let result = numeric_rhombic(&spec, &opts, &tols)?;
        let rd = result.design.as_rhombic().unwrap();
        println!(
            "K={k}, (d0, d1, d2) = ({d0}, {d1}, {d2}): {} / certified {}",
            result.region_label,
            result.is_certified()
        );
        for o in rd.orbits() {
            println!("  orbit {}: level = {:.6}, weight = {:.6}", o.ell, o.level, o.weight);
        }
        let gb = gamma_blocks(&spec, &info_blocks_rhombic(&spec, rd)?)?;
        let all_vertex = rd.orbits().iter().all(|o| o.level == 1.0);
        if all_vertex {
            println!(
                "  vertex certificate: g2 = {:.2e}, g1 + g0/K = {:.2e}, g0 = {:.4}",
                gb.g2,
                gb.g1 + gb.g0 / k as f64,
                gb.g0
            );
        } else {
            println!("  interior certificate: max |gamma| = {:.2e}", gb.max_abs());
        }
        println!();
    }
    Ok(())
}
