//! Checking arbitrary designs against the optimality conditions: an exact
//! optimum, a perturbed version of it, and a non-invariant design.
//!
//! ```bash
//! cargo run --example verify_design
//! ```

use optdes::design::{DesignPoint, DiscreteDesign, Orbit, RhombicDesign};
use optdes::equivalence::kw_verify;
use optdes::{DispersionSpec, Tolerances};

fn report(tag: &str, spec: &DispersionSpec, dd: &DiscreteDesign) -> optdes::Result<()> {
    let r = kw_verify(spec, dd, Tolerances::default().kw)?;
    println!("{tag}");
    println!(
        "  verdict {:?} | min psi = {:.3e} at {:?}",
        r.verdict, r.min_psi, r.argmin
    );
    for s in r.support_psi.iter().take(3) {
        println!("  psi{:?} = {:.3e}", s.x, s.psi);
    }
    if let Some(note) = &r.note {
        println!("  note: {note}");
    }
    println!();
    Ok(())
}

fn main() -> optdes::Result<()> {
    let spec = DispersionSpec::new(2, 0.5, 2.0, 1.0)?;

    // The known optimum for these parameters: both levels interior.
    let x0 = (0.5f64 / 3.0).sqrt();
    let x1 = (0.5f64 / 1.0).sqrt();
    let optimal = RhombicDesign::new(
        2,
        vec![
            Orbit { ell: 0, level: x0, weight: 0.5 },
            Orbit { ell: 1, level: x1, weight: 0.5 },
        ],
    )?;
    report("exact optimum", &spec, &optimal.to_discrete()?)?;

    // Shift 5% of the weight between the orbits: support equalities break.
    let perturbed = RhombicDesign::new(
        2,
        vec![
            Orbit { ell: 0, level: x0, weight: 0.55 },
            Orbit { ell: 1, level: x1, weight: 0.45 },
        ],
    )?;
    report("perturbed weights", &spec, &perturbed.to_discrete()?)?;

    // A design with no symmetry at all: the verifier falls back to a
    // dense sensitivity matrix and a grid search for the box minimum.
    let irregular = DiscreteDesign::new(
        2,
        vec![
            DesignPoint { x: vec![1.0, 0.3], w: 0.4 },
            DesignPoint { x: vec![-0.6, 1.0], w: 0.3 },
            DesignPoint { x: vec![0.2, -0.9], w: 0.3 },
        ],
    )?;
    report("non-invariant design", &spec, &irregular)?;
    Ok(())
}
