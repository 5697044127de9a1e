//! Structural invariants that hold across the whole parameter space,
//! checked on seeded random inputs.

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use optdes::design::{DesignPoint, DiscreteDesign, Orbit, RhombicDesign};
use optdes::equivalence::{kw_verify, min_psi_box, psi};
use optdes::information::{
    blocks_from_dense, gamma_blocks, info_blocks_rhombic, info_dense, log_det, log_det_dense,
    GammaBlocks,
};
use optdes::model::{regression_vector, DispersionSpec, SymPair};
use optdes::solvers::{closed_form_k2, numeric_rhombic, NumericOptions};
use optdes::Tolerances;

fn random_spec(rng: &mut StdRng, k: usize) -> DispersionSpec {
    let d1 = rng.gen_range(0.3..2.5);
    let lower = -d1 / (k as f64 - 1.0);
    let d2 = rng.gen_range(0.9 * lower..0.9 * d1);
    let d0 = rng.gen_range(0.1..2.5);
    DispersionSpec::new(k, d0, d1, d2).unwrap()
}

fn random_rhombic(rng: &mut StdRng, k: usize) -> RhombicDesign {
    let n_orbits = k / 2 + 1;
    let mut weights: Vec<f64> = (0..n_orbits).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let orbits = (0..n_orbits)
        .map(|ell| Orbit {
            ell,
            level: rng.gen_range(0.15..1.0),
            weight: weights[ell],
        })
        .collect();
    RhombicDesign::new(k, orbits).unwrap()
}

fn random_point(rng: &mut StdRng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Coordinate permutation combined with a global sign flip.
fn random_group_element(rng: &mut StdRng, k: usize) -> (Vec<usize>, bool) {
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    (perm, rng.gen_bool(0.5))
}

fn apply(perm: &[usize], flip: bool, x: &[f64]) -> Vec<f64> {
    let sign = if flip { -1.0 } else { 1.0 };
    perm.iter().map(|&i| sign * x[i]).collect()
}

#[test]
fn variance_is_invariant_under_signed_permutations() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let k = rng.gen_range(2..=6);
        let spec = random_spec(&mut rng, k);
        let x = random_point(&mut rng, k);
        let (perm, flip) = random_group_element(&mut rng, k);
        let gx = apply(&perm, flip, &x);
        let a = spec.variance_at(&x).unwrap();
        let b = spec.variance_at(&gx).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn variance_is_bounded_below_by_intercept_variance() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..300 {
        let k = rng.gen_range(2..=6);
        let spec = random_spec(&mut rng, k);
        let x = random_point(&mut rng, k);
        let var = spec.variance_at(&x).unwrap();
        assert!(var > 0.0);
        if spec.d2() >= 0.0 {
            assert!(var >= spec.d0() * (1.0 - 1e-12));
        }
    }
}

#[test]
fn sym_inverse_is_an_involution() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..300 {
        let k = rng.gen_range(2..=8);
        let m = SymPair::new(k, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if !m.is_invertible_with(1e-6) {
            continue;
        }
        let back = m.inverse().unwrap().inverse().unwrap();
        assert!((back.a1 - m.a1).abs() <= 1e-12 * m.a1.abs().max(1.0));
        assert!((back.a2 - m.a2).abs() <= 1e-12 * m.a2.abs().max(1.0));
    }
}

#[test]
fn orbit_points_share_their_variance() {
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..100 {
        let k = rng.gen_range(2..=6);
        let spec = random_spec(&mut rng, k);
        let ell = rng.gen_range(0..=k / 2);
        let level = rng.gen_range(0.05..1.0);
        let expected = spec.variance_on_orbit(ell, level);
        for x in optdes::design::expand_orbit(k, ell, level).unwrap() {
            let var = spec.variance_at(&x).unwrap();
            assert!((var - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}

#[test]
fn orbit_expansion_round_trips_through_discrete() {
    let mut rng = StdRng::seed_from_u64(15);
    for _ in 0..100 {
        let k = rng.gen_range(2..=6);
        let rd = random_rhombic(&mut rng, k);
        let dd = rd.to_discrete().unwrap();
        assert!(dd.is_invariant());
        let mass: f64 = dd.points().iter().map(|p| p.w).sum();
        assert!((mass - 1.0).abs() <= 1e-12);

        // group points back by orbit: index = negatives (folded), level = |x_0|
        for orbit in rd.orbits() {
            let mut weight = 0.0;
            let mut count = 0;
            for p in dd.points() {
                let level = p.x[0].abs();
                let negatives = p.x.iter().filter(|v| **v < 0.0).count();
                let ell = negatives.min(k - negatives);
                if ell == orbit.ell && (level - orbit.level).abs() <= 1e-12 {
                    weight += p.w;
                    count += 1;
                }
            }
            assert_eq!(count, optdes::design::orbit_size(k, orbit.ell).unwrap());
            assert!((weight - orbit.weight).abs() <= 1e-12);
        }
    }
}

#[test]
fn block_and_dense_information_agree() {
    let mut rng = StdRng::seed_from_u64(16);
    for _ in 0..60 {
        let k = rng.gen_range(2..=6);
        let spec = random_spec(&mut rng, k);
        let rd = random_rhombic(&mut rng, k);
        let ib = info_blocks_rhombic(&spec, &rd).unwrap();
        let dense = info_dense(&spec, &rd.to_discrete().unwrap()).unwrap();
        let embedded = ib.to_dense();
        for i in 0..=k {
            for j in 0..=k {
                assert!((dense[(i, j)] - embedded[(i, j)]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn log_det_is_concave_in_the_weights() {
    let mut rng = StdRng::seed_from_u64(17);
    for _ in 0..60 {
        let k = rng.gen_range(2..=4);
        let spec = random_spec(&mut rng, k);
        let n = k + 4;
        let support: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut rng, k)).collect();
        let draw_weights = |rng: &mut StdRng| {
            let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            for v in w.iter_mut() {
                *v /= total;
            }
            w
        };
        let wa = draw_weights(&mut rng);
        let wb = draw_weights(&mut rng);
        let lambda = rng.gen_range(0.1..0.9);

        let design = |w: &[f64]| {
            DiscreteDesign::new(
                k,
                support
                    .iter()
                    .zip(w)
                    .map(|(x, &wi)| DesignPoint { x: x.clone(), w: wi })
                    .collect(),
            )
            .unwrap()
        };
        let ld = |w: &[f64]| log_det_dense(&info_dense(&spec, &design(w)).unwrap());

        let mixed: Vec<f64> = wa
            .iter()
            .zip(&wb)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        let lhs = ld(&mixed);
        let rhs = lambda * ld(&wa) + (1.0 - lambda) * ld(&wb);
        assert!(lhs >= rhs - 1e-9, "concavity violated: {lhs} < {rhs}");
    }
}

#[test]
fn criterion_is_invariant_under_the_symmetry_group() {
    let mut rng = StdRng::seed_from_u64(18);
    for _ in 0..60 {
        let k = rng.gen_range(2..=5);
        let spec = random_spec(&mut rng, k);
        let dd = random_rhombic(&mut rng, k).to_discrete().unwrap();
        let (perm, flip) = random_group_element(&mut rng, k);
        let transformed = DiscreteDesign::new(
            k,
            dd.points()
                .iter()
                .map(|p| DesignPoint { x: apply(&perm, flip, &p.x), w: p.w })
                .collect(),
        )
        .unwrap();
        let a = log_det_dense(&info_dense(&spec, &dd).unwrap());
        let b = log_det_dense(&info_dense(&spec, &transformed).unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

/// The two forms of the optimality condition agree pointwise:
/// `f' M^{-1} f / sigma^2 <= p` iff `psi >= 0`, via the identity
/// `psi(x) = p sigma^2(x) - f' M^{-1} f`.
#[test]
fn sensitivity_function_identity() {
    let mut rng = StdRng::seed_from_u64(19);
    for _ in 0..40 {
        let k = rng.gen_range(2..=4);
        let spec = random_spec(&mut rng, k);
        let dd = random_rhombic(&mut rng, k).to_discrete().unwrap();
        let m = info_dense(&spec, &dd).unwrap();
        let Some(minv) = m.clone().cholesky().map(|c| c.inverse()) else {
            continue;
        };
        let gb = gamma_blocks(&spec, &blocks_from_dense(&m)).unwrap();
        for _ in 0..50 {
            let x = random_point(&mut rng, k);
            let f = regression_vector(&x).unwrap();
            let fv = DMatrix::from_column_slice(k + 1, 1, &f);
            let quad = (fv.transpose() * &minv * &fv)[(0, 0)];
            let sigma2 = spec.variance_at(&x).unwrap();
            let psi_direct = psi(&gb, &x);
            let psi_identity = spec.p() as f64 * sigma2 - quad;
            assert!(
                (psi_direct - psi_identity).abs() <= 1e-9 * psi_direct.abs().max(1.0),
                "{psi_direct} vs {psi_identity}"
            );
            assert_eq!(psi_direct >= -1e-9, quad / sigma2 <= spec.p() as f64 + 1e-9);
        }
    }
}

#[test]
fn box_minimum_is_a_global_lower_bound() {
    let mut rng = StdRng::seed_from_u64(20);
    for _ in 0..25 {
        let k = rng.gen_range(2..=5);
        let gb = GammaBlocks {
            k,
            g0: rng.gen_range(-1.0..1.0),
            g1: rng.gen_range(-1.0..1.0),
            g2: rng.gen_range(-1.0..1.0),
        };
        let (min, argmin) = min_psi_box(&gb);
        assert!((psi(&gb, &argmin) - min).abs() <= 1e-12);
        for _ in 0..400 {
            let x = random_point(&mut rng, k);
            assert!(psi(&gb, &x) >= min - 1e-12);
        }
    }
}

#[test]
fn vertex_pattern_gamma_has_zero_box_minimum() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..50 {
        let k = rng.gen_range(2..=6);
        let g0 = rng.gen_range(0.0..2.0);
        let gb = GammaBlocks { k, g0, g1: -g0 / k as f64, g2: 0.0 };
        let (min, _) = min_psi_box(&gb);
        assert!(min.abs() <= 1e-12 * g0.max(1.0));
    }
}

#[test]
fn kw_report_verdict_matches_its_own_fields() {
    let mut rng = StdRng::seed_from_u64(22);
    let tols = Tolerances::default();
    for _ in 0..30 {
        let k = rng.gen_range(2..=4);
        let spec = random_spec(&mut rng, k);
        let dd = random_rhombic(&mut rng, k).to_discrete().unwrap();
        let report = kw_verify(&spec, &dd, tols.kw).unwrap();
        let support_ok = report.support_psi.iter().all(|s| s.psi.abs() <= tols.kw);
        if report.min_psi >= -tols.kw && support_ok {
            assert_eq!(report.verdict, optdes::Verdict::Optimal);
        } else {
            assert_ne!(report.verdict, optdes::Verdict::Optimal);
        }
    }
}

/// Closed form and numeric solver agree over the whole square cone.
#[test]
fn closed_form_and_numeric_agree_for_k2() {
    let mut rng = StdRng::seed_from_u64(23);
    let tols = Tolerances::default();
    let opts = NumericOptions::default();
    for _ in 0..50 {
        let spec = loop {
            let s = random_spec(&mut rng, 2);
            if s.d2().abs() > 0.02 * s.d1() {
                break s;
            }
        };
        let closed = closed_form_k2(&spec, &tols).unwrap();
        let numeric = numeric_rhombic(&spec, &opts, &tols).unwrap();
        assert!(closed.is_certified(), "closed form failed at {spec:?}");
        assert!(
            (closed.log_det - numeric.log_det).abs() <= 1e-6,
            "log det mismatch at {spec:?}: {} vs {}",
            closed.log_det,
            numeric.log_det
        );
    }
}

/// Certified interior designs satisfy the zero-gamma characterization;
/// certified multi-orbit vertex designs the diagonal one.
#[test]
fn certified_designs_satisfy_gamma_characterizations() {
    let mut rng = StdRng::seed_from_u64(24);
    let tols = Tolerances::default();
    let opts = NumericOptions::default();
    let mut interior_seen = 0;
    let mut vertex_seen = 0;
    for _ in 0..40 {
        let k = rng.gen_range(2..=4);
        let spec = random_spec(&mut rng, k);
        let Ok(result) = numeric_rhombic(&spec, &opts, &tols) else {
            continue;
        };
        if !result.is_certified() {
            continue;
        }
        let rd = result.design.as_rhombic().unwrap();
        let gb = gamma_blocks(&spec, &info_blocks_rhombic(&spec, rd).unwrap()).unwrap();
        let all_vertex = rd.orbits().iter().all(|o| o.level >= 1.0 - 1e-9);
        if !all_vertex && rd.orbits().iter().any(|o| o.level < 1.0 - 1e-6) {
            interior_seen += 1;
            assert!(
                gb.max_abs() <= 1e-6,
                "nonzero gamma {gb:?} for interior design at {spec:?}"
            );
        } else if all_vertex && rd.orbits().len() >= 2 {
            vertex_seen += 1;
            assert!(gb.g2.abs() <= 1e-7, "gamma2 = {} at {spec:?}", gb.g2);
            assert!(
                (gb.g1 + gb.g0 / k as f64).abs() <= 1e-7,
                "gamma1 != -gamma0/K at {spec:?}"
            );
            assert!(gb.g0 >= -1e-9);
        }
    }
    assert!(interior_seen > 0 && vertex_seen > 0);
}

/// The log determinant of the rhombic blocks factorization matches the
/// dense determinant on expansions.
#[test]
fn block_log_det_matches_dense_log_det() {
    let mut rng = StdRng::seed_from_u64(25);
    for _ in 0..60 {
        let k = rng.gen_range(2..=5);
        let spec = random_spec(&mut rng, k);
        let rd = random_rhombic(&mut rng, k);
        let block = log_det(&info_blocks_rhombic(&spec, &rd).unwrap());
        let dense = log_det_dense(&info_dense(&spec, &rd.to_discrete().unwrap()).unwrap());
        if block.is_finite() && dense.is_finite() {
            assert!((block - dense).abs() <= 1e-10 * block.abs().max(1.0));
        }
    }
}
