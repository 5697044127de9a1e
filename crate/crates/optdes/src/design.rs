//! Discrete designs and their orbit-compressed rhombic form.
//!
//! A discrete (approximate) design is a finite list of support points in
//! `[-1,1]^K` with nonnegative weights summing to one. A rhombic design is
//! invariant under coordinate permutations and the global sign flip and is
//! supported on the space diagonals of the hypercube, excluding the origin.
//! It is stored orbit by orbit: index `ell` in `0..=K/2`, a location level
//! in `(0, 1]` and an orbit weight. Orbit `ell` at level `t` consists of
//! all points with coordinates `±t` and exactly `ell` or `K - ell` minus
//! signs, `N_ell = 2 binom(K, ell)` points (halved when `ell = K/2`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const POINT_MATCH_TOL: f64 = 1e-12;

/// One support point with its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub x: Vec<f64>,
    pub w: f64,
}

/// A finite design on the hypercube: pairwise distinct points, nonnegative
/// weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscrete", into = "RawDiscrete")]
pub struct DiscreteDesign {
    k: usize,
    points: Vec<DesignPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDiscrete {
    k: usize,
    points: Vec<DesignPoint>,
}

impl TryFrom<RawDiscrete> for DiscreteDesign {
    type Error = Error;
    fn try_from(raw: RawDiscrete) -> Result<Self> {
        DiscreteDesign::new(raw.k, raw.points)
    }
}

impl From<DiscreteDesign> for RawDiscrete {
    fn from(d: DiscreteDesign) -> Self {
        RawDiscrete {
            k: d.k,
            points: d.points,
        }
    }
}

impl DiscreteDesign {
    pub fn new(k: usize, points: Vec<DesignPoint>) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidDesign("dimension must be >= 1".into()));
        }
        let mut total = 0.0;
        for p in &points {
            if p.x.len() != k {
                return Err(Error::InvalidDesign(format!(
                    "point {:?} does not have {k} coordinates",
                    p.x
                )));
            }
            if p.x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::InvalidDesign(format!(
                    "point {:?} is outside the hypercube",
                    p.x
                )));
            }
            if p.w.is_nan() || p.w < 0.0 {
                return Err(Error::InvalidDesign(format!("negative weight {}", p.w)));
            }
            total += p.w;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDesign(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points_equal(&points[i].x, &points[j].x) {
                    return Err(Error::InvalidDesign(format!(
                        "duplicate support point {:?}",
                        points[i].x
                    )));
                }
            }
        }
        Ok(DiscreteDesign { k, points })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    /// True iff the weighted support is mapped to itself by every coordinate
    /// permutation and by the global sign flip.
    ///
    /// It suffices to check the generators of the group: the adjacent
    /// transpositions and the flip; invariance under those implies
    /// invariance under everything they generate.
    pub fn is_invariant(&self) -> bool {
        let flip = |x: &[f64]| x.iter().map(|v| -v).collect::<Vec<_>>();
        if !self.maps_to_itself(flip) {
            return false;
        }
        for i in 0..self.k.saturating_sub(1) {
            let swap = move |x: &[f64]| {
                let mut y = x.to_vec();
                y.swap(i, i + 1);
                y
            };
            if !self.maps_to_itself(swap) {
                return false;
            }
        }
        true
    }

    fn maps_to_itself(&self, g: impl Fn(&[f64]) -> Vec<f64>) -> bool {
        self.points.iter().all(|p| {
            let image = g(&p.x);
            self.points
                .iter()
                .any(|q| points_equal(&q.x, &image) && (q.w - p.w).abs() <= POINT_MATCH_TOL)
        })
    }
}

fn points_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|(u, v)| (u - v).abs() <= POINT_MATCH_TOL)
}

/// One orbit of a rhombic design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub ell: usize,
    pub level: f64,
    pub weight: f64,
}

/// Orbit-level representation of a design invariant under coordinate
/// permutations and the global sign flip, supported on the space diagonals
/// of the hypercube with the origin excluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRhombic", into = "RawRhombic")]
pub struct RhombicDesign {
    k: usize,
    orbits: Vec<Orbit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawRhombic {
    k: usize,
    orbits: Vec<Orbit>,
}

impl TryFrom<RawRhombic> for RhombicDesign {
    type Error = Error;
    fn try_from(raw: RawRhombic) -> Result<Self> {
        RhombicDesign::new(raw.k, raw.orbits)
    }
}

impl From<RhombicDesign> for RawRhombic {
    fn from(d: RhombicDesign) -> Self {
        RawRhombic {
            k: d.k,
            orbits: d.orbits,
        }
    }
}

impl RhombicDesign {
    pub fn new(k: usize, orbits: Vec<Orbit>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidDesign("dimension must be >= 2".into()));
        }
        let max_ell = k / 2;
        let mut total = 0.0;
        for o in &orbits {
            if o.ell > max_ell {
                return Err(Error::InvalidDesign(format!(
                    "orbit index {} exceeds K/2 = {max_ell}",
                    o.ell
                )));
            }
            if !(o.level > 0.0 && o.level <= 1.0) {
                return Err(Error::InvalidDesign(format!(
                    "orbit level {} is outside (0, 1]",
                    o.level
                )));
            }
            if o.weight.is_nan() || o.weight < 0.0 {
                return Err(Error::InvalidDesign(format!(
                    "negative orbit weight {}",
                    o.weight
                )));
            }
            total += o.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDesign(format!(
                "orbit weights sum to {total}, expected 1"
            )));
        }
        for i in 0..orbits.len() {
            for j in (i + 1)..orbits.len() {
                if orbits[i].ell == orbits[j].ell {
                    return Err(Error::InvalidDesign(format!(
                        "orbit index {} appears twice",
                        orbits[i].ell
                    )));
                }
            }
        }
        let mut orbits = orbits;
        orbits.sort_by_key(|o| o.ell);
        Ok(RhombicDesign { k, orbits })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn orbits(&self) -> &[Orbit] {
        &self.orbits
    }

    /// Expands the orbits into an explicit discrete design: each point of
    /// orbit `ell` carries weight `w_ell / N_ell`. Zero-weight orbits are
    /// dropped.
    pub fn to_discrete(&self) -> Result<DiscreteDesign> {
        let mut points = Vec::new();
        for o in &self.orbits {
            if o.weight == 0.0 {
                continue;
            }
            let orbit_points = expand_orbit(self.k, o.ell, o.level)?;
            let w = o.weight / orbit_points.len() as f64;
            for x in orbit_points {
                points.push(DesignPoint { x, w });
            }
        }
        DiscreteDesign::new(self.k, points)
    }
}

/// Number of points `N_ell` in orbit `ell`: `2 binom(K, ell)`, halved when
/// `ell = K/2` (the orbit is its own mirror image there).
pub fn orbit_size(k: usize, ell: usize) -> Result<usize> {
    if ell > k / 2 {
        return Err(Error::Domain(format!(
            "orbit index {ell} exceeds K/2 = {}",
            k / 2
        )));
    }
    let b = binomial(k, ell);
    Ok(if 2 * ell == k { b } else { 2 * b })
}

fn binomial(n: usize, r: usize) -> usize {
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All points with every coordinate `±level` and exactly `ell` or `K - ell`
/// negative coordinates, in a deterministic order: minus-sign positions are
/// enumerated lexicographically, the `ell`-negatives block first. The list
/// is closed under the global sign flip.
pub fn expand_orbit(k: usize, ell: usize, level: f64) -> Result<Vec<Vec<f64>>> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::Domain(format!("level {level} is outside (0, 1]")));
    }
    if ell > k / 2 {
        return Err(Error::Domain(format!(
            "orbit index {ell} exceeds K/2 = {}",
            k / 2
        )));
    }
    let mut points = sign_patterns(k, ell, level);
    if k - ell != ell {
        points.extend(sign_patterns(k, k - ell, level));
    }
    Ok(points)
}

fn sign_patterns(k: usize, negatives: usize, level: f64) -> Vec<Vec<f64>> {
    use itertools::Itertools;
    (0..k)
        .combinations(negatives)
        .map(|neg| {
            let mut x = vec![level; k];
            for i in neg {
                x[i] = -level;
            }
            x
        })
        .collect()
}
